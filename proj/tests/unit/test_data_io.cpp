#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedae/data.hpp"
#include "fedae/random.hpp"

using namespace fedae;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fedae_test_data_io" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

WindowSet small_set(bool labeled) {
    WindowSet ws;
    ws.client_id = "uci_000";
    ws.source = "uci";
    if (labeled) ws.labels.emplace();
    Rng rng(3);
    std::vector<float> w(kWindowElems);
    for (int i = 0; i < 3; ++i) {
        for (float& v : w) v = static_cast<float>(rng.normal());
        ws.push(w, labeled ? std::optional<int>(i * 4) : std::nullopt);
    }
    return ws;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("window file layout and round trip") {
    for (bool labeled : {true, false}) {
        const WindowSet ws = small_set(labeled);
        std::stringstream buf;
        write_windows(buf, ws);
        const std::string bytes = buf.str();
        CHECK(bytes.substr(0, 4) == "FWIN");
        const std::size_t header = 4 + 4 + (4 + 7) + (4 + 3) + 4 + 1;
        CHECK(bytes.size() == header + 3 * kWindowElems * 4 + (labeled ? 3 : 0));
        CHECK(static_cast<unsigned char>(bytes[header - 1]) == (labeled ? 1 : 0));

        std::stringstream in(bytes);
        const WindowSet back = read_windows(in);
        CHECK(back.client_id == "uci_000");
        CHECK(back.source == "uci");
        CHECK(back.values == ws.values);
        CHECK(back.labels == ws.labels);
    }
}

TEST_CASE("window file rejects corruption") {
    std::stringstream buf;
    write_windows(buf, small_set(true));
    std::string bytes = buf.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 10));
    CHECK_THROWS_AS(read_windows(truncated), DataError);
    bytes[bytes.size() - 1] = 42;  // label outside the vocabulary
    std::stringstream bad_label(bytes);
    CHECK_THROWS_AS(read_windows(bad_label), DataError);
    CHECK_THROWS_AS(load_windows("/nonexistent/file.fwin"), DataError);
}

TEST_CASE("sensor csv ingestion") {
    const fs::path dir = scratch("csv");
    std::ostringstream text;
    text << "t,ax,ay,az,gx,gy,gz,label\n";
    for (int i = 0; i < 300; ++i) {
        text << i * 0.01 << ',' << i << ",0,0,0,0," << -i << ',' << (i < 150 ? "W" : "5") << '\n';
    }
    write_text(dir / "a.csv", text.str());
    const Stream s = read_sensor_csv(dir / "a.csv");
    CHECK(s.length() == 300);
    REQUIRE(s.labels.has_value());
    CHECK((*s.labels)[0] == 0);
    CHECK((*s.labels)[299] == 5);
    CHECK(s.values[6 * 10 + 5] == -10.0);

    // 100 Hz resampled to 50 Hz gives 150 samples: one window.
    const WindowSet ws = windows_from_stream(s, 100.0, "dev", "tag");
    CHECK(ws.size() == 1);
    CHECK(ws.client_id == "dev");

    write_text(dir / "bad.csv", "t,ax,ay,az,gx,gy\n0,1,2,3,4,5\n");
    CHECK_THROWS_AS(read_sensor_csv(dir / "bad.csv"), DataError);
    write_text(dir / "bad_value.csv", "t,ax,ay,az,gx,gy,gz\n0,1,x,3,4,5,6\n");
    CHECK_THROWS_AS(read_sensor_csv(dir / "bad_value.csv"), DataError);
    write_text(dir / "unlabeled.csv", "t,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5,6\n");
    CHECK_FALSE(read_sensor_csv(dir / "unlabeled.csv").labels.has_value());
}

TEST_CASE("manifest round trip with relative paths") {
    const fs::path dir = scratch("manifest");
    const WindowSet ws = small_set(true);
    save_windows(dir / "uci_000.fwin", ws);
    Manifest m;
    m.seed = 17;
    m.clients.push_back({"uci_000", "uci", "uci_000.fwin", "fwin", 50.0});
    const std::vector<WindowSet> contents{ws};
    write_manifest(dir / "manifest.json", m, contents);

    const Manifest back = read_manifest(dir / "manifest.json");
    CHECK(back.seed == 17u);
    REQUIRE(back.clients.size() == 1);
    CHECK(back.clients[0].path == "uci_000.fwin");

    const auto loaded = load_manifest_clients(dir / "manifest.json");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].values == ws.values);

    m.clients[0].client_id = "other";
    write_manifest(dir / "mismatch.json", m, contents);
    CHECK_THROWS_AS(load_manifest_clients(dir / "mismatch.json"), DataError);

    write_text(dir / "unknown.json", R"({"format":"fwin-manifest","version":1,"clients":[],"extra":1})");
    CHECK_THROWS(read_manifest(dir / "unknown.json"));
}
