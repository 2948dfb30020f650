#include "fedae/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "fedae/random.hpp"

namespace fedae {
namespace {

constexpr std::array<std::string_view, kActivityCount> kCodes = {"W", "U",  "D",  "ST", "SD", "L", "J",
                                                                 "R", "BK", "C", "BS", "T",  "SW"};

constexpr std::array<ActivityLabel, kActivityCount> kActivities = {
    ActivityLabel::W, ActivityLabel::U,  ActivityLabel::D, ActivityLabel::ST, ActivityLabel::SD,
    ActivityLabel::L, ActivityLabel::J,  ActivityLabel::R, ActivityLabel::BK, ActivityLabel::C,
    ActivityLabel::BS, ActivityLabel::T, ActivityLabel::SW};

bool valid_label(int label) { return label >= 0 && label < static_cast<int>(kActivityCount); }

}  // namespace

std::string_view activity_code(ActivityLabel label) { return kCodes[static_cast<std::size_t>(label)]; }

std::string_view activity_code(int index) { return activity_code(activity_from_index(index)); }

ActivityLabel activity_from_code(std::string_view code) {
    for (std::size_t i = 0; i < kCodes.size(); ++i) {
        if (kCodes[i] == code) return kActivities[i];
    }
    throw DataError("unknown activity code '" + std::string(code) + "'");
}

ActivityLabel activity_from_index(int index) {
    if (!valid_label(index)) throw DataError("activity index " + std::to_string(index) + " outside [0,13)");
    return kActivities[static_cast<std::size_t>(index)];
}

const std::array<ActivityLabel, kActivityCount>& all_activities() { return kActivities; }

void WindowSet::push(std::span<const float> window, std::optional<int> label) {
    if (window.size() != kWindowElems) throw ShapeError("WindowSet::push: window must hold 6x128 values");
    if (labels.has_value() != label.has_value()) {
        throw ShapeError("WindowSet::push: label presence must match the set");
    }
    values.insert(values.end(), window.begin(), window.end());
    if (label) labels->push_back(*label);
}

Tensor WindowSet::batch(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw ShapeError("WindowSet::batch: empty index list");
    std::vector<float> out(indices.size() * kWindowElems);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw ShapeError("WindowSet::batch: index out of range");
        std::copy_n(values.data() + indices[i] * kWindowElems, kWindowElems, out.data() + i * kWindowElems);
    }
    return Tensor(Shape{indices.size(), kChannels, kWindowLen}, std::move(out));
}

Tensor WindowSet::as_tensor() const {
    if (empty()) throw ShapeError("WindowSet::as_tensor: empty set");
    return Tensor(Shape{size(), kChannels, kWindowLen}, values);
}

WindowSet WindowSet::subset(std::span<const std::size_t> indices) const {
    WindowSet out;
    out.source = source;
    out.client_id = client_id;
    out.values.reserve(indices.size() * kWindowElems);
    if (labels) out.labels.emplace().reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= size()) throw ShapeError("WindowSet::subset: index out of range");
        const auto w = window(i);
        out.values.insert(out.values.end(), w.begin(), w.end());
        if (labels) out.labels->push_back((*labels)[i]);
    }
    return out;
}

void WindowSet::validate() const {
    if (values.size() % kWindowElems != 0) throw DataError("window buffer is not a whole number of 6x128 windows");
    if (labels) {
        if (labels->size() != size()) throw DataError("label count does not match window count");
        for (int l : *labels) {
            if (!valid_label(l)) throw DataError("label " + std::to_string(l) + " outside [0,13)");
        }
    }
}

Stream resample(const Stream& stream, double src_hz, double dst_hz) {
    if (!(src_hz > 0.0) || !(dst_hz > 0.0)) throw DataError("resample: sampling rates must be positive");
    const std::size_t t = stream.length();
    if (t < 2) throw DataError("resample: stream needs at least 2 samples");
    const std::size_t ch = stream.channels;
    if (src_hz == dst_hz) return stream;

    const double ratio = src_hz / dst_hz;  // source samples per output sample
    // Small slack keeps exact rational grids (e.g. 100 -> 50 Hz) from losing the last point.
    const auto out_len = static_cast<std::size_t>(std::floor(static_cast<double>(t - 1) / ratio + 1e-9)) + 1;
    Stream out;
    out.channels = ch;
    out.values.resize(out_len * ch);
    if (stream.labels) out.labels.emplace(out_len);
    for (std::size_t j = 0; j < out_len; ++j) {
        const double pos = static_cast<double>(j) * ratio;
        auto i0 = static_cast<std::size_t>(std::floor(pos + 1e-9));
        if (i0 > t - 1) i0 = t - 1;
        double frac = pos - static_cast<double>(i0);
        if (frac < 1e-9) frac = 0.0;
        const std::size_t i1 = std::min(i0 + 1, t - 1);
        for (std::size_t c = 0; c < ch; ++c) {
            const double a = stream.values[i0 * ch + c];
            const double b = stream.values[i1 * ch + c];
            out.values[j * ch + c] = frac == 0.0 ? a : a + (b - a) * frac;
        }
        if (stream.labels) (*out.labels)[j] = (*stream.labels)[frac < 0.5 ? i0 : i1];
    }
    return out;
}

std::size_t window_count(std::size_t length, std::size_t window, std::size_t hop) {
    if (length < window) return 0;
    return (length - window) / hop + 1;
}

WindowSet make_windows(const Stream& stream, std::size_t window, std::size_t hop) {
    if (stream.channels != kChannels) throw DataError("make_windows: stream must have 6 channels");
    if (window != kWindowLen) throw DataError("make_windows: window length must be 128");
    if (hop == 0) throw DataError("make_windows: hop must be positive");
    const std::size_t t = stream.length();
    if (t < window) {
        throw DataError("make_windows: stream of " + std::to_string(t) + " samples is shorter than one window");
    }
    const std::size_t n = window_count(t, window, hop);
    WindowSet ws;
    ws.values.resize(n * kWindowElems);
    if (stream.labels) ws.labels.emplace(n);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t start = w * hop;
        float* dst = ws.values.data() + w * kWindowElems;
        for (std::size_t c = 0; c < kChannels; ++c) {
            for (std::size_t i = 0; i < window; ++i) {
                dst[c * window + i] = static_cast<float>(stream.values[(start + i) * kChannels + c]);
            }
        }
        if (stream.labels) {
            std::array<std::size_t, kActivityCount> votes{};
            for (std::size_t i = 0; i < window; ++i) {
                const int l = (*stream.labels)[start + i];
                if (!valid_label(l)) throw DataError("make_windows: invalid sample label " + std::to_string(l));
                ++votes[static_cast<std::size_t>(l)];
            }
            (*ws.labels)[w] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        }
    }
    return ws;
}

void znormalize_in_place(WindowSet& ws) {
    const std::size_t n = ws.size();
    for (std::size_t w = 0; w < n; ++w) {
        float* win = ws.values.data() + w * kWindowElems;
        for (std::size_t c = 0; c < kChannels; ++c) {
            float* x = win + c * kWindowLen;
            double mean = 0.0;
            for (std::size_t i = 0; i < kWindowLen; ++i) mean += x[i];
            mean /= static_cast<double>(kWindowLen);
            double var = 0.0;
            for (std::size_t i = 0; i < kWindowLen; ++i) var += (x[i] - mean) * (x[i] - mean);
            const double scale = 1.0 / (std::sqrt(var / static_cast<double>(kWindowLen)) + kNormEpsilon);
            for (std::size_t i = 0; i < kWindowLen; ++i) x[i] = static_cast<float>((x[i] - mean) * scale);
        }
    }
}

WindowSet znormalize(WindowSet ws) {
    znormalize_in_place(ws);
    return ws;
}

SplitSizes split_sizes(std::size_t n) {
    // round-half-up of 0.2 * m, in integers: floor((2m + 5) / 10)
    const std::size_t test = (2 * n + 5) / 10;
    const std::size_t rest = n - test;
    const std::size_t server = (2 * rest + 5) / 10;
    return SplitSizes{test, rest - server, server};
}

PartitionFragment partition(const WindowSet& labeled, std::uint64_t seed) {
    labeled.validate();
    if (!labeled.has_labels()) throw DataError("partition: client '" + labeled.client_id + "' has no labels");
    const std::size_t n = labeled.size();
    if (n < 5) {
        throw DataError("partition: client '" + labeled.client_id + "' has " + std::to_string(n) +
                        " windows, at least 5 are needed");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    const SplitSizes sizes = split_sizes(n);
    PartitionIndices idx;
    idx.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes.test));
    idx.server_labeled.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.test),
                              order.begin() + static_cast<std::ptrdiff_t>(sizes.test + sizes.server_labeled));
    idx.client_unlabeled.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.test + sizes.server_labeled),
                                order.end());
    std::sort(idx.test.begin(), idx.test.end());
    std::sort(idx.server_labeled.begin(), idx.server_labeled.end());
    std::sort(idx.client_unlabeled.begin(), idx.client_unlabeled.end());

    PartitionFragment frag;
    frag.shard.client_id = labeled.client_id;
    frag.shard.source = labeled.source;
    frag.shard.test = labeled.subset(idx.test);
    frag.shard.train = labeled.subset(idx.client_unlabeled);
    frag.shard.train_ground_truth = std::move(*frag.shard.train.labels);
    frag.shard.train.labels.reset();
    frag.server_labeled = labeled.subset(idx.server_labeled);
    frag.indices = std::move(idx);
    return frag;
}

std::vector<std::string> FederationLayout::sources() const {
    std::vector<std::string> tags;
    for (const auto& c : clients) {
        if (std::find(tags.begin(), tags.end(), c.source) == tags.end()) tags.push_back(c.source);
    }
    return tags;
}

std::vector<std::size_t> FederationLayout::test_indices(std::string_view source) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < test_sources.size(); ++i) {
        if (test_sources[i] == source) idx.push_back(i);
    }
    return idx;
}

FederationLayout build_federation(std::vector<WindowSet> labeled_clients, std::uint64_t seed) {
    if (labeled_clients.empty()) throw DataError("build_federation: no clients");
    std::sort(labeled_clients.begin(), labeled_clients.end(),
              [](const WindowSet& a, const WindowSet& b) { return a.client_id < b.client_id; });
    for (std::size_t i = 1; i < labeled_clients.size(); ++i) {
        if (labeled_clients[i].client_id == labeled_clients[i - 1].client_id) {
            throw DataError("build_federation: duplicate client id '" + labeled_clients[i].client_id + "'");
        }
    }
    FederationLayout layout;
    layout.server_labeled.labels.emplace();
    layout.server_labeled.source = "server";
    layout.server_labeled.client_id = "server";
    layout.server_test.labels.emplace();
    layout.server_test.source = "combined";
    layout.server_test.client_id = "server";
    for (const auto& client : labeled_clients) {
        PartitionFragment frag = partition(client, derive_seed(seed, 0, client.client_id));
        const auto& lab = frag.server_labeled;
        layout.server_labeled.values.insert(layout.server_labeled.values.end(), lab.values.begin(), lab.values.end());
        layout.server_labeled.labels->insert(layout.server_labeled.labels->end(), lab.labels->begin(),
                                             lab.labels->end());
        layout.server_labeled_sources.insert(layout.server_labeled_sources.end(), lab.size(), client.source);
        const auto& test = frag.shard.test;
        layout.server_test.values.insert(layout.server_test.values.end(), test.values.begin(), test.values.end());
        layout.server_test.labels->insert(layout.server_test.labels->end(), test.labels->begin(), test.labels->end());
        layout.test_sources.insert(layout.test_sources.end(), test.size(), client.source);
        layout.clients.push_back(std::move(frag.shard));
    }
    return layout;
}

std::uint64_t window_bytes(std::size_t n, bool labeled) {
    return static_cast<std::uint64_t>(n) * (kWindowElems * 4 + (labeled ? 4 : 0));
}

StorageFootprint storage_footprint(const FederationLayout& layout) {
    StorageFootprint fp;
    std::map<std::string, std::pair<std::uint64_t, std::size_t>> totals;
    for (const auto& c : layout.clients) {
        const std::uint64_t bytes =
            window_bytes(c.train.size(), c.train.has_labels()) + window_bytes(c.test.size(), c.test.has_labels());
        fp.per_client[c.client_id] = bytes;
        auto& [sum, count] = totals[c.source];
        sum += bytes;
        ++count;
    }
    for (const auto& [tag, t] : totals) {
        fp.mean_per_source[tag] = static_cast<double>(t.first) / static_cast<double>(t.second);
    }
    return fp;
}

}  // namespace fedae
