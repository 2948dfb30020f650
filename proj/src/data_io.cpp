#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedae/binary_io.hpp"
#include "fedae/data.hpp"

namespace fedae {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("csv line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    }
}

int parse_label(const std::string& s, std::size_t line_no) {
    int index = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), index);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return static_cast<int>(activity_from_index(index));
    try {
        return static_cast<int>(activity_from_code(s));
    } catch (const DataError&) {
        throw DataError("csv line " + std::to_string(line_no) + ": unknown label '" + s + "'");
    }
}

}  // namespace

void write_windows(std::ostream& out, const WindowSet& ws) {
    ws.validate();
    out.write("FWIN", 4);
    binary::put_u32(out, kWindowFormatVersion);
    binary::put_string(out, ws.client_id);
    binary::put_string(out, ws.source);
    binary::put_u32(out, static_cast<std::uint32_t>(ws.size()));
    binary::put_u8(out, ws.has_labels() ? 1 : 0);
    for (float v : ws.values) binary::put_f32(out, v);
    if (ws.labels) {
        for (int l : *ws.labels) binary::put_u8(out, static_cast<std::uint8_t>(l));
    }
    if (!out) throw DataError("write_windows: stream write failed");
}

WindowSet read_windows(std::istream& in) {
    binary::expect_magic(in, "FWIN");
    const std::uint32_t version = binary::get_u32(in, "version");
    if (version != kWindowFormatVersion) throw DataError("FWIN: unsupported version " + std::to_string(version));
    WindowSet ws;
    ws.client_id = binary::get_string(in, 4096, "client id");
    ws.source = binary::get_string(in, 4096, "source tag");
    const std::uint32_t n = binary::get_u32(in, "window count");
    const std::uint8_t has_labels = binary::get_u8(in, "label flag");
    if (has_labels > 1) throw DataError("FWIN: label flag must be 0 or 1");
    ws.values.resize(static_cast<std::size_t>(n) * kWindowElems);
    for (float& v : ws.values) v = binary::get_f32(in, "window values");
    if (has_labels) {
        ws.labels.emplace(n);
        for (int& l : *ws.labels) l = binary::get_u8(in, "labels");
    }
    ws.validate();
    return ws;
}

void save_windows(const std::filesystem::path& path, const WindowSet& ws) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    write_windows(out, ws);
}

WindowSet load_windows(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return read_windows(in);
}

Stream read_sensor_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("csv '" + path.string() + "' is empty");
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected = {"t", "ax", "ay", "az", "gx", "gy", "gz"};
    const bool labeled = header.size() == 8 && header[7] == "label";
    if (header.size() < 7 || !std::equal(expected.begin(), expected.end(), header.begin()) ||
        (header.size() == 8 && !labeled) || header.size() > 8) {
        throw DataError("csv '" + path.string() + "': header must be t,ax,ay,az,gx,gy,gz[,label]");
    }
    Stream stream;
    stream.channels = kChannels;
    if (labeled) stream.labels.emplace();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields");
        }
        for (std::size_t c = 1; c <= kChannels; ++c) stream.values.push_back(parse_double(fields[c], line_no));
        if (labeled) stream.labels->push_back(parse_label(fields[7], line_no));
    }
    return stream;
}

WindowSet windows_from_stream(const Stream& stream, double sample_rate_hz, std::string client_id,
                              std::string source) {
    WindowSet ws = make_windows(resample(stream, sample_rate_hz, kTargetHz));
    znormalize_in_place(ws);
    ws.client_id = std::move(client_id);
    ws.source = std::move(source);
    return ws;
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest '" + path.string() + "': " + e.what());
    }
    Manifest m;
    try {
        if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& c : j.at("clients")) {
            ManifestEntry e;
            e.client_id = c.at("client_id").get<std::string>();
            e.source = c.at("source").get<std::string>();
            e.path = c.at("path").get<std::string>();
            e.format = c.value("format", std::string("fwin"));
            e.sample_rate_hz = c.value("sample_rate_hz", kTargetHz);
            if (e.format != "fwin" && e.format != "csv") {
                throw DataError("manifest: unknown format '" + e.format + "' for client '" + e.client_id + "'");
            }
            m.clients.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest '" + path.string() + "': " + e.what());
    }
    if (m.clients.empty()) throw DataError("manifest '" + path.string() + "' lists no clients");
    return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest, std::span<const WindowSet> contents) {
    nlohmann::json j;
    j["format"] = "fwin-manifest";
    j["version"] = 1;
    if (manifest.seed) j["seed"] = *manifest.seed;
    j["clients"] = nlohmann::json::array();
    for (std::size_t i = 0; i < manifest.clients.size(); ++i) {
        const auto& e = manifest.clients[i];
        nlohmann::json c = {{"client_id", e.client_id},   {"source", e.source},
                            {"path", e.path.generic_string()}, {"format", e.format},
                            {"sample_rate_hz", e.sample_rate_hz}};
        if (i < contents.size()) {
            c["windows"] = contents[i].size();
            c["has_labels"] = contents[i].has_labels();
        }
        j["clients"].push_back(std::move(c));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<WindowSet> load_manifest_clients(const std::filesystem::path& path) {
    const Manifest m = read_manifest(path);
    const auto base = path.parent_path();
    std::vector<WindowSet> clients;
    for (const auto& e : m.clients) {
        const auto file = e.path.is_absolute() ? e.path : base / e.path;
        WindowSet ws;
        if (e.format == "csv") {
            ws = windows_from_stream(read_sensor_csv(file), e.sample_rate_hz, e.client_id, e.source);
        } else {
            ws = load_windows(file);
            if (ws.client_id != e.client_id) {
                throw DataError("manifest: file '" + file.string() + "' holds client '" + ws.client_id +
                                "', expected '" + e.client_id + "'");
            }
            ws.source = e.source;
        }
        clients.push_back(std::move(ws));
    }
    return clients;
}

}  // namespace fedae
