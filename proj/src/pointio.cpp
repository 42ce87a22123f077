#include "flowmix/pointio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace flowmix::io {

namespace {

std::string ext_of(const std::string& path) {
    auto pos = path.rfind('.');
    return pos == std::string::npos ? "" : path.substr(pos);
}

void fmt_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

double parse_double(const std::string& tok, const std::string& path, int lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InputError(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
    }
}

} // namespace

void write_cloud(const std::string& path, const PointCloud& pc) {
    const std::string ext = ext_of(path);
    std::ofstream f(path);
    if (!f) throw InputError("cannot open for writing: " + path);
    const bool ids = !pc.labels.empty();
    std::string out;
    if (ext == ".ply") {
        out += "ply\nformat ascii 1.0\n";
        out += "element vertex " + std::to_string(pc.size()) + "\n";
        const char* names[3] = {"x", "y", "z"};
        for (int c = 0; c < pc.d; ++c) out += std::string("property double ") + names[c] + "\n";
        if (ids) out += "property int flow_id\n";
        out += "end_header\n";
    }
    for (int i = 0; i < pc.size(); ++i) {
        for (int c = 0; c < pc.d; ++c) {
            if (c) out += ext == ".csv" ? "," : " ";
            fmt_double(out, pc.at(i, c));
        }
        if (ids) {
            out += ext == ".csv" ? "," : " ";
            out += std::to_string(pc.labels[i]);
        }
        out += "\n";
    }
    f << out;
    if (!f) throw InputError("write failed: " + path);
}

PointCloud read_cloud(const std::string& path) {
    const std::string ext = ext_of(path);
    if (ext != ".xyz" && ext != ".ply" && ext != ".csv")
        throw InputError("unsupported extension: " + path);
    std::ifstream f(path);
    if (!f) throw InputError("cannot open: " + path);

    PointCloud pc;
    std::string line;
    int lineno = 0;
    int n_declared = -1;
    bool has_id = false;
    int d = 0;

    if (ext == ".ply") {
        bool in_header = true;
        std::vector<std::string> props;
        while (in_header && std::getline(f, line)) {
            ++lineno;
            auto toks = tokenize(line);
            if (toks.empty()) continue;
            if (toks[0] == "element" && toks.size() >= 3 && toks[1] == "vertex")
                n_declared = std::stoi(toks[2]);
            else if (toks[0] == "property" && toks.size() >= 3)
                props.push_back(toks[2]);
            else if (toks[0] == "end_header")
                in_header = false;
            else if (toks[0] == "format" && (toks.size() < 2 || toks[1] != "ascii"))
                throw InputError(path + ": only ascii ply supported");
        }
        if (in_header) throw InputError(path + ": missing end_header");
        for (const auto& p : props) {
            if (p == "x" || p == "y" || p == "z") ++d;
            else if (p == "flow_id") has_id = true;
            else throw InputError(path + ": unsupported ply property " + p);
        }
        if (d < 1) throw InputError(path + ": no coordinate properties");
        pc.d = d;
    }

    while (std::getline(f, line)) {
        ++lineno;
        auto toks = tokenize(ext == ".csv" ? [&] {
            std::string s = line;
            for (char& ch : s)
                if (ch == ',') ch = ' ';
            return s;
        }() : line);
        if (toks.empty()) continue;
        if (pc.d == 0) {
            // infer layout from the first data line: last column is an id if integral
            d = static_cast<int>(toks.size());
            if (d > 3) { d -= 1; has_id = true; }
            else if (d == 3 && ext == ".csv") {
                // ambiguous: 3 columns could be xyz or xy+id; treat integral last token as id
                const auto& t = toks.back();
                if (t.find('.') == std::string::npos && t.find('e') == std::string::npos &&
                    t.find('E') == std::string::npos) { d -= 1; has_id = true; }
            }
            pc.d = d;
        }
        const std::size_t want = static_cast<std::size_t>(pc.d) + (has_id ? 1 : 0);
        if (toks.size() != want)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(want) + " columns, got " + std::to_string(toks.size()));
        for (int c = 0; c < pc.d; ++c) pc.pts.push_back(parse_double(toks[c], path, lineno));
        if (has_id) pc.labels.push_back(static_cast<int>(parse_double(toks[pc.d], path, lineno)));
    }
    if (pc.d == 0) throw InputError(path + ": empty file");
    if (n_declared >= 0 && pc.size() != n_declared)
        throw InputError(path + ": header declares " + std::to_string(n_declared) +
                         " vertices, found " + std::to_string(pc.size()));
    return pc;
}

} // namespace flowmix::io
