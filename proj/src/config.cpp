#include "flowmix/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace flowmix::cfg {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open for writing: " + path);
    f << content;
    if (!f) throw InputError("write failed: " + path);
}

namespace {

std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Removes a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

json parse_scalar(const std::string& raw, int line_no) {
    const std::string v = strip(raw);
    if (v.empty()) throw InputError("toml line " + std::to_string(line_no) + ": empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw InputError("toml line " + std::to_string(line_no) + ": unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        std::size_t pos = 0;
        if (v.find_first_of(".eE") == std::string::npos ||
            (v.size() > 1 && (v[0] == '0') && (v[1] == 'x'))) {
            const long long i = std::stoll(v, &pos);
            if (pos == v.size()) return i;
        }
        const double d = std::stod(v, &pos);
        if (pos == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw InputError("toml line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
}

} // namespace

std::string toml_to_json(const std::string& toml_text) {
    json obj = json::object();
    std::istringstream in(toml_text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = strip(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[')
            throw InputError("toml line " + std::to_string(line_no) + ": tables are not supported; use flat keys");
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw InputError("toml line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(body.substr(0, eq));
        const std::string val = strip(body.substr(eq + 1));
        if (key.empty()) throw InputError("toml line " + std::to_string(line_no) + ": empty key");
        if (!val.empty() && val.front() == '[') {
            if (val.back() != ']')
                throw InputError("toml line " + std::to_string(line_no) + ": unterminated array");
            json arr = json::array();
            std::string inner = val.substr(1, val.size() - 2);
            std::istringstream items(inner);
            std::string item;
            while (std::getline(items, item, ','))
                if (!strip(item).empty()) arr.push_back(parse_scalar(item, line_no));
            obj[key] = arr;
        } else {
            obj[key] = parse_scalar(val, line_no);
        }
    }
    return obj.dump(2);
}

train::TrainConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".json") return train::TrainConfig::from_json(text);
    if (ext == ".toml") return train::TrainConfig::from_json(toml_to_json(text));
    throw InputError("config must be .toml or .json: " + path);
}

std::string RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["config"] = json::parse(config_json);
    j["seed"] = seed;
    j["version"] = version_string();
    j["wall_seconds"] = wall_seconds;
    j["outputs"] = outputs;
    return j.dump(2);
}

void write_manifest(const std::string& path, const RunManifest& m) {
    write_file(path, m.to_json() + "\n");
}

} // namespace flowmix::cfg
