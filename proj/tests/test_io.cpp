#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "flowmix/config.hpp"
#include "flowmix/pointio.hpp"

using namespace flowmix;
using nlohmann::json;

namespace {

std::filesystem::path tmpdir() {
    auto p = std::filesystem::temp_directory_path() / "flowmix_io_test";
    std::filesystem::create_directories(p);
    return p;
}

PointCloud awkward_cloud(int d, bool labels) {
    // values chosen to stress text round-tripping
    PointCloud pc = PointCloud::empty(d, 5);
    const double vals[] = {0.1,      -1.0 / 3.0,          1e-300, 12345678.987654321,
                           -2.5e17, 0.30000000000000004, 1.0,    -0.0,
                           4e-17,   7.25,                -9.5,   2.0,
                           0.625,   -3.875,              11.0};
    for (int i = 0; i < 5; ++i)
        for (int c = 0; c < d; ++c) pc.at(i, c) = vals[i * 3 + c];
    if (labels) pc.labels = {0, 1, 1, 2, 0};
    return pc;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

std::uint64_t fnv1a(const std::vector<double>& v) {
    std::uint64_t h = 1469598103934665603ull;
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    return h;
}

} // namespace

TEST_CASE("xyz round-trips bitwise") {
    for (int d : {1, 2, 3}) {
        PointCloud pc = awkward_cloud(d, false);
        auto path = (tmpdir() / ("rt" + std::to_string(d) + ".xyz")).string();
        io::write_cloud(path, pc);
        PointCloud rd = io::read_cloud(path);
        REQUIRE(rd.d == d);
        REQUIRE(rd.size() == 5);
        for (int i = 0; i < 5; ++i)
            for (int c = 0; c < d; ++c) CHECK(rd.at(i, c) == pc.at(i, c));
        CHECK(rd.labels.empty());
    }
}

TEST_CASE("ply round-trips with flow ids and a correct header") {
    PointCloud pc = awkward_cloud(3, true);
    auto path = (tmpdir() / "rt.ply").string();
    io::write_cloud(path, pc);

    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text.rfind("ply\n", 0) == 0);
    CHECK(text.find("element vertex 5") != std::string::npos);
    CHECK(text.find("end_header") != std::string::npos);
    CHECK(text.find("flow_id") != std::string::npos);

    PointCloud rd = io::read_cloud(path);
    REQUIRE(rd.d == 3);
    REQUIRE(rd.size() == 5);
    for (int i = 0; i < 5; ++i) {
        for (int c = 0; c < 3; ++c) CHECK(rd.at(i, c) == pc.at(i, c));
        CHECK(rd.labels[i] == pc.labels[i]);
    }
}

TEST_CASE("csv round-trips with and without id column") {
    for (bool labels : {false, true}) {
        PointCloud pc = awkward_cloud(2, labels);
        auto path = (tmpdir() / (labels ? "l.csv" : "p.csv")).string();
        io::write_cloud(path, pc);
        PointCloud rd = io::read_cloud(path);
        REQUIRE(rd.size() == 5);
        REQUIRE(rd.d == 2);
        for (int i = 0; i < 5; ++i)
            for (int c = 0; c < 2; ++c) CHECK(rd.at(i, c) == pc.at(i, c));
        CHECK(rd.labels.size() == (labels ? 5u : 0u));
    }
}

TEST_CASE("malformed files produce parse errors with line numbers") {
    auto bad1 = tmpdir() / "bad1.xyz";
    write_text(bad1, "0.0 0.0\n1.0 oops\n");
    try {
        (void)io::read_cloud(bad1.string());
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }

    auto bad2 = tmpdir() / "bad2.xyz";
    write_text(bad2, "0.0 0.0\n1.0 2.0 3.0\n");
    CHECK_THROWS_AS((void)io::read_cloud(bad2.string()), InputError); // ragged row

    auto bad3 = tmpdir() / "bad3.ply";
    write_text(bad3, "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty "
                     "double y\nend_header\n0 0\n1 1\n");
    CHECK_THROWS_AS((void)io::read_cloud(bad3.string()), InputError); // count mismatch

    CHECK_THROWS_AS((void)io::read_cloud((tmpdir() / "nope.xyz").string()), InputError);
    CHECK_THROWS_AS((void)io::read_cloud((tmpdir() / "bad.obj").string()), InputError);
}

TEST_CASE("reference fixture reproduces its frozen checksum") {
    PointCloud rd = io::read_cloud(std::string(FLOWMIX_TEST_DIR) + "/fixtures/torus_2048.ply");
    REQUIRE(rd.size() == 2048);
    REQUIRE(rd.d == 3);
    CHECK(fnv1a(rd.pts) == 0xde06bd0fd3a3cd53ull);
}

TEST_CASE("toml subset converts to json") {
    const std::string toml = R"(# a run config
family = "two_squares_2d"   # inline comment
epochs = 200
lr0 = 5e-3
size_matched = true
encoder_widths = [32, 64, 128]
note = "has # hash and = sign"
)";
    json j = json::parse(cfg::toml_to_json(toml));
    CHECK(j["family"] == "two_squares_2d");
    CHECK(j["epochs"] == 200);
    CHECK(j["lr0"] == 5e-3);
    CHECK(j["size_matched"] == true);
    CHECK(j["encoder_widths"] == json({32, 64, 128}));
    CHECK(j["note"] == "has # hash and = sign");
}

TEST_CASE("toml errors carry line numbers") {
    try {
        (void)cfg::toml_to_json("a = 1\n[table]\n");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS((void)cfg::toml_to_json("a = \n"), InputError);
    CHECK_THROWS_AS((void)cfg::toml_to_json("justaword\n"), InputError);
    CHECK_THROWS_AS((void)cfg::toml_to_json("a = [1, 2\n"), InputError);
}

TEST_CASE("configs load identically from toml and json") {
    const std::string toml = "family = \"ring_2d\"\nepochs = 50\nm = 3\nlr0 = 0.001\n"
                             "warmup_epochs = 7\nseed = 9\n";
    auto tpath = tmpdir() / "c.toml";
    write_text(tpath, toml);
    auto jpath = tmpdir() / "c.json";
    write_text(jpath, cfg::toml_to_json(toml));

    auto a = cfg::load_config(tpath.string());
    auto b = cfg::load_config(jpath.string());
    CHECK(a.to_json() == b.to_json());
    CHECK(a.family == "ring_2d");
    CHECK(a.epochs == 50);
    CHECK(a.m == 3);
    CHECK(a.lr0 == 0.001);
    CHECK(a.warmup_epochs == 7);
    CHECK(a.seed == 9);

    CHECK_THROWS_AS((void)cfg::load_config((tmpdir() / "c.yaml").string()), InputError);
}

TEST_CASE("unknown config keys are rejected with the valid list") {
    auto path = tmpdir() / "bad.toml";
    write_text(path, "epohcs = 50\n");
    try {
        (void)cfg::load_config(path.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epohcs") != std::string::npos);
        CHECK(msg.find("epochs") != std::string::npos); // lists the valid keys
    }
}

TEST_CASE("config validation rejects bad values") {
    train::TrainConfig c = train::preset_config("two_squares_2d");
    CHECK_NOTHROW(c.validate());
    c.m = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = train::preset_config("two_squares_2d");
    c.lr0 = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = train::preset_config("two_squares_2d");
    c.family = "not_a_family";
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("manifest json records the run") {
    cfg::RunManifest m;
    m.command = "train";
    m.config_json = "{\"epochs\":3}";
    m.seed = 123;
    m.wall_seconds = 1.5;
    m.outputs = {"model.ckpt", "train_log.csv"};
    json j = json::parse(m.to_json());
    CHECK(j["command"] == "train");
    CHECK(j["config"]["epochs"] == 3);
    CHECK(j["seed"] == 123);
    CHECK(j["version"] == cfg::version_string());
    CHECK(j["outputs"].size() == 2);

    auto path = (tmpdir() / "manifest.json").string();
    cfg::write_manifest(path, m);
    json rd = json::parse(cfg::read_file(path));
    CHECK(rd == j);
}
