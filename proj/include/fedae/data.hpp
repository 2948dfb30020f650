#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedae/tensor.hpp"

namespace fedae {

inline constexpr std::size_t kChannels = 6;
inline constexpr std::size_t kWindowLen = 128;
inline constexpr std::size_t kWindowHop = 64;
inline constexpr std::size_t kWindowElems = kChannels * kWindowLen;
inline constexpr double kTargetHz = 50.0;
inline constexpr double kNormEpsilon = 1e-8;

/// Unified activity vocabulary; the enumerator value is the class index.
enum class ActivityLabel : int { W, U, D, ST, SD, L, J, R, BK, C, BS, T, SW };

inline constexpr std::size_t kActivityCount = 13;

std::string_view activity_code(ActivityLabel label);
std::string_view activity_code(int index);
ActivityLabel activity_from_code(std::string_view code);
ActivityLabel activity_from_index(int index);
const std::array<ActivityLabel, kActivityCount>& all_activities();

/// n windows of [kChannels, kWindowLen] floats, stored contiguously.
struct WindowSet {
    std::vector<float> values;
    std::optional<std::vector<int>> labels;
    std::string source;
    std::string client_id;

    std::size_t size() const noexcept { return values.size() / kWindowElems; }
    bool empty() const noexcept { return values.empty(); }
    bool has_labels() const noexcept { return labels.has_value(); }

    std::span<const float> window(std::size_t i) const { return {values.data() + i * kWindowElems, kWindowElems}; }
    std::span<float> window(std::size_t i) { return {values.data() + i * kWindowElems, kWindowElems}; }

    /// Appends one window (and its label, when the set is labeled).
    void push(std::span<const float> window, std::optional<int> label = std::nullopt);

    /// Windows at `indices`, in that order, as a [k, 6, 128] tensor.
    Tensor batch(std::span<const std::size_t> indices) const;
    Tensor as_tensor() const;
    WindowSet subset(std::span<const std::size_t> indices) const;

    /// Throws DataError on a ragged buffer or invalid labels.
    void validate() const;
};

/// Time-major multichannel samples: values[t * channels + c].
struct Stream {
    std::size_t channels = kChannels;
    std::vector<double> values;
    std::optional<std::vector<int>> labels;  // one per sample

    std::size_t length() const noexcept { return channels == 0 ? 0 : values.size() / channels; }
};

/// Linear interpolation onto a uniform dst_hz grid;
/// output length floor((t-1) * dst_hz / src_hz) + 1. Labels take the nearest sample.
Stream resample(const Stream& stream, double src_hz, double dst_hz = kTargetHz);

std::size_t window_count(std::size_t length, std::size_t window = kWindowLen, std::size_t hop = kWindowHop);

/// Sliding windows of a 6-channel stream, channel-major per window. Window
/// labels are the majority sample label (ties to the lower class index).
WindowSet make_windows(const Stream& stream, std::size_t window = kWindowLen, std::size_t hop = kWindowHop);

/// Per window, per channel: (x - mean) / (std + 1e-8).
WindowSet znormalize(WindowSet ws);
void znormalize_in_place(WindowSet& ws);

/// One simulated device. `train` is label-stripped; `test` keeps its labels.
/// `train_ground_truth` holds the stripped labels for dataset statistics
/// only and never reaches a training routine.
struct ClientShard {
    std::string client_id;
    std::string source;
    WindowSet train;
    WindowSet test;
    std::vector<int> train_ground_truth;
};

/// Source-window indices assigned to each partition of one client.
struct PartitionIndices {
    std::vector<std::size_t> test;
    std::vector<std::size_t> client_unlabeled;
    std::vector<std::size_t> server_labeled;
};

struct PartitionFragment {
    ClientShard shard;
    WindowSet server_labeled;
    PartitionIndices indices;
};

struct SplitSizes {
    std::size_t test;
    std::size_t client_unlabeled;
    std::size_t server_labeled;
};

/// test = round(0.2 n), server = round(0.2 (n - test)), remainder to the
/// client; rounding is half-up.
SplitSizes split_sizes(std::size_t n);

/// Seeded shuffle-then-slice of one labeled client set.
PartitionFragment partition(const WindowSet& labeled, std::uint64_t seed);

struct FederationLayout {
    std::vector<ClientShard> clients;  // ascending client_id
    WindowSet server_labeled;               // pooled labeled share, in client order
    WindowSet server_test;                  // union of client test sets, in client order
    std::vector<std::string> server_labeled_sources;  // source tag of each server_labeled window
    std::vector<std::string> test_sources;            // source tag of each server_test window

    /// Source tags in first-appearance order.
    std::vector<std::string> sources() const;
    std::vector<std::size_t> test_indices(std::string_view source) const;
};

/// Partitions every client (seed derived per client id) and pools the
/// labeled and test shares.
FederationLayout build_federation(std::vector<WindowSet> labeled_clients, std::uint64_t seed);

/// One pseudo-dataset of the synthetic federation.
struct SyntheticDataset {
    std::string tag;
    std::size_t clients = 1;
    std::size_t min_windows = 200;
    std::size_t max_windows = 300;
    std::vector<ActivityLabel> classes;
    /// Relative class frequencies aligned with `classes`; empty selects the
    /// default imbalance profile.
    std::vector<double> class_weights;
};

struct SynthConfig {
    std::vector<SyntheticDataset> datasets;
    double noise = 0.2;          // additive noise std relative to unit signal amplitude
    double client_shift = 0.05;  // max relative per-client frequency shift

    void validate() const;

    /// Desk-scale reference: 4 pseudo-datasets, 8 clients, ~250 windows each, 6 classes.
    static SynthConfig reference();
    /// Client counts and activity sets of the four-dataset federation (80 clients).
    static SynthConfig full_scale(std::size_t min_windows = 40, std::size_t max_windows = 80);
};

/// Default relative class frequencies: Jump is the minority, Walk and Stand the majority.
double default_class_weight(ActivityLabel label);

/// Labeled, z-normalized windows per client, in ascending client_id order.
std::vector<WindowSet> generate_synthetic_clients(const SynthConfig& config, std::uint64_t seed);
FederationLayout generate_synthetic_federation(const SynthConfig& config, std::uint64_t seed);

/// Bytes of n windows in the canonical format: 6*128*4 each, plus 4 per label.
std::uint64_t window_bytes(std::size_t n, bool labeled);

struct StorageFootprint {
    std::map<std::string, std::uint64_t> per_client;
    std::map<std::string, double> mean_per_source;
};

StorageFootprint storage_footprint(const FederationLayout& layout);

/// Canonical FWIN file: "FWIN", u32 version, u32+bytes client id, u32+bytes
/// source tag, u32 n, u8 has_labels, n*6*128 f32, then n u8 labels; all
/// little-endian.
inline constexpr std::uint32_t kWindowFormatVersion = 1;

void write_windows(std::ostream& out, const WindowSet& ws);
WindowSet read_windows(std::istream& in);
void save_windows(const std::filesystem::path& path, const WindowSet& ws);
WindowSet load_windows(const std::filesystem::path& path);

/// CSV with header t,ax,ay,az,gx,gy,gz[,label]; label is a class code or index.
Stream read_sensor_csv(const std::filesystem::path& path);

/// Resample to 50 Hz, window and z-normalize one recorded stream.
WindowSet windows_from_stream(const Stream& stream, double sample_rate_hz, std::string client_id,
                              std::string source);

struct ManifestEntry {
    std::string client_id;
    std::string source;
    std::filesystem::path path;  // relative paths resolve against the manifest directory
    std::string format = "fwin";  // "fwin" or "csv"
    double sample_rate_hz = kTargetHz;
};

struct Manifest {
    std::vector<ManifestEntry> clients;
    std::optional<std::uint64_t> seed;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest,
                    std::span<const WindowSet> contents);
/// Loads every client listed in a manifest.
std::vector<WindowSet> load_manifest_clients(const std::filesystem::path& path);

}  // namespace fedae
