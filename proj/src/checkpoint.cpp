#include "flowmix/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace flowmix::ckpt {

namespace {
constexpr char kMagic[] = "FLMX1\n";

void write_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!f) throw InputError("checkpoint: truncated file");
    return v;
}

std::string read_str(std::ifstream& f, std::uint64_t len) {
    std::string s(len, '\0');
    f.read(s.data(), static_cast<std::streamsize>(len));
    if (!f) throw InputError("checkpoint: truncated file");
    return s;
}

std::ifstream open_checked(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open checkpoint: " + path);
    char magic[sizeof(kMagic) - 1];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw InputError("not a checkpoint file: " + path);
    return f;
}

} // namespace

void save(const std::string& path, const nn::ParamRegistry& reg, const std::string& meta_json) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open for writing: " + path);
    f.write(kMagic, sizeof(kMagic) - 1);
    write_u64(f, meta_json.size());
    f.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
    write_u64(f, reg.entries.size());
    for (const auto& e : reg.entries) {
        write_u64(f, e.name.size());
        f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_u64(f, static_cast<std::uint64_t>(e.tensor.rows()));
        write_u64(f, static_cast<std::uint64_t>(e.tensor.cols()));
        f.write(reinterpret_cast<const char*>(e.tensor.data().data()),
                static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
    }
    if (!f) throw InputError("checkpoint write failed: " + path);
}

std::string load(const std::string& path, nn::ParamRegistry& reg) {
    auto f = open_checked(path);
    const auto meta = read_str(f, read_u64(f));
    const std::uint64_t count = read_u64(f);
    if (count != reg.entries.size())
        throw InputError("checkpoint: entry count mismatch (" + std::to_string(count) + " vs " +
                         std::to_string(reg.entries.size()) + ")");
    for (auto& e : reg.entries) {
        const auto name = read_str(f, read_u64(f));
        const auto rows = read_u64(f);
        const auto cols = read_u64(f);
        if (name != e.name)
            throw InputError("checkpoint: expected entry '" + e.name + "', found '" + name + "'");
        if (rows != static_cast<std::uint64_t>(e.tensor.rows()) ||
            cols != static_cast<std::uint64_t>(e.tensor.cols()))
            throw InputError("checkpoint: shape mismatch for '" + name + "'");
        f.read(reinterpret_cast<char*>(e.tensor.data().data()),
               static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
        if (!f) throw InputError("checkpoint: truncated tensor data");
    }
    return meta;
}

std::string peek_meta(const std::string& path) {
    auto f = open_checked(path);
    return read_str(f, read_u64(f));
}

} // namespace flowmix::ckpt
