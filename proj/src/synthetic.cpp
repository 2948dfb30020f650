#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "fedae/data.hpp"
#include "fedae/random.hpp"

namespace fedae {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Waveform family of one activity class. Z-normalization removes per-channel
/// scale, so classes differ in frequency, harmonic content and the phase
/// relation between channels.
struct ClassSignature {
    double cycles;                               // base cycles per window
    double channel_phase_step;                   // radians between successive channels
    std::array<double, kChannels> harmonic;      // second-harmonic amplitude per channel
};

ClassSignature signature(ActivityLabel label) {
    const auto c = static_cast<double>(static_cast<int>(label));
    ClassSignature s{};
    s.cycles = 1.5 * std::pow(1.22, c);
    s.channel_phase_step = std::fmod(0.35 + 0.45 * c, kTwoPi);
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        const double u = 0.37 * (c + 1.0) * static_cast<double>(ch + 1);
        s.harmonic[ch] = 0.15 + 0.6 * (u - std::floor(u));
    }
    return s;
}

struct ClientProfile {
    double frequency_scale;
    double noise_scale;
    double phase_offset;
};

void render_window(const ClassSignature& sig, const ClientProfile& client, double noise, Rng& rng,
                   std::span<float> out) {
    const double freq = sig.cycles * client.frequency_scale * (1.0 + 0.02 * rng.normal());
    const double phase0 = rng.uniform(0.0, kTwoPi);
    const double sigma = noise * client.noise_scale;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        const double phase = phase0 + client.phase_offset + static_cast<double>(ch) * sig.channel_phase_step;
        for (std::size_t i = 0; i < kWindowLen; ++i) {
            const double arg = kTwoPi * freq * static_cast<double>(i) / static_cast<double>(kWindowLen) + phase;
            const double v = std::sin(arg) + sig.harmonic[ch] * std::sin(2.0 * arg + 0.5) + sigma * rng.normal();
            out[ch * kWindowLen + i] = static_cast<float>(v);
        }
    }
}

std::string client_name(const std::string& tag, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return tag + "_" + buf;
}

std::vector<ActivityLabel> intersect(std::vector<ActivityLabel> classes, const std::vector<ActivityLabel>& universe) {
    std::erase_if(classes, [&](ActivityLabel l) { return std::find(universe.begin(), universe.end(), l) == universe.end(); });
    return classes;
}

using A = ActivityLabel;

const std::vector<ActivityLabel> kUciClasses = {A::ST, A::SD, A::W, A::U, A::D, A::L};
const std::vector<ActivityLabel> kHharClasses = {A::ST, A::SD, A::W, A::U, A::D, A::BK};
const std::vector<ActivityLabel> kRealworldClasses = {A::ST, A::SD, A::W, A::U, A::D, A::J, A::L, A::R};
const std::vector<ActivityLabel> kShlClasses = {A::ST, A::W, A::R, A::BK, A::C, A::BS, A::T, A::SW};

}  // namespace

double default_class_weight(ActivityLabel label) {
    switch (label) {
        case A::W: return 1.0;
        case A::SD: return 1.0;
        case A::ST: return 0.8;
        case A::L: return 0.6;
        case A::U: return 0.5;
        case A::D: return 0.5;
        case A::R: return 0.5;
        case A::BK: return 0.5;
        case A::C: return 0.4;
        case A::BS: return 0.4;
        case A::T: return 0.4;
        case A::SW: return 0.4;
        case A::J: return 0.15;
    }
    return 1.0;
}

void SynthConfig::validate() const {
    if (datasets.empty()) throw ConfigError("synthetic: at least one dataset is required");
    std::size_t total_clients = 0;
    for (const auto& d : datasets) {
        if (d.tag.empty()) throw ConfigError("synthetic: dataset tag must not be empty");
        if (d.classes.empty()) throw ConfigError("synthetic: dataset '" + d.tag + "' has no classes");
        if (d.min_windows < 5 || d.max_windows < d.min_windows) {
            throw ConfigError("synthetic: dataset '" + d.tag + "' needs 5 <= min_windows <= max_windows");
        }
        if (!d.class_weights.empty()) {
            if (d.class_weights.size() != d.classes.size()) {
                throw ConfigError("synthetic: dataset '" + d.tag + "' class_weights must align with classes");
            }
            for (double w : d.class_weights) {
                if (!(w > 0.0)) throw ConfigError("synthetic: class weights must be positive");
            }
        }
        total_clients += d.clients;
    }
    if (total_clients == 0) throw ConfigError("synthetic: empty client list");
    if (!(noise >= 0.0) || !(client_shift >= 0.0) || client_shift >= 0.5) {
        throw ConfigError("synthetic: noise must be >= 0 and client_shift in [0, 0.5)");
    }
}

SynthConfig SynthConfig::reference() {
    // The four activity sets restricted to a six-class universe.
    const std::vector<ActivityLabel> universe = kUciClasses;
    SynthConfig cfg;
    cfg.datasets = {
        {"uci", 2, 200, 300, intersect(kUciClasses, universe), {}},
        {"hhar", 2, 200, 300, intersect(kHharClasses, universe), {}},
        {"realworld", 2, 200, 300, intersect(kRealworldClasses, universe), {}},
        {"shl", 2, 200, 300, intersect(kShlClasses, universe), {}},
    };
    return cfg;
}

SynthConfig SynthConfig::full_scale(std::size_t min_windows, std::size_t max_windows) {
    SynthConfig cfg;
    cfg.datasets = {
        {"uci", 5, min_windows, max_windows, kUciClasses, {}},
        {"hhar", 51, min_windows, max_windows, kHharClasses, {}},
        {"realworld", 15, min_windows, max_windows, kRealworldClasses, {}},
        {"shl", 9, min_windows, max_windows, kShlClasses, {}},
    };
    return cfg;
}

std::vector<WindowSet> generate_synthetic_clients(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    std::vector<WindowSet> clients;
    for (const auto& d : config.datasets) {
        std::vector<double> weights = d.class_weights;
        if (weights.empty()) {
            for (ActivityLabel l : d.classes) weights.push_back(default_class_weight(l));
        }
        std::vector<double> cumulative(weights.size());
        std::partial_sum(weights.begin(), weights.end(), cumulative.begin());

        for (std::size_t i = 0; i < d.clients; ++i) {
            WindowSet ws;
            ws.client_id = client_name(d.tag, i);
            ws.source = d.tag;
            ws.labels.emplace();
            Rng rng(derive_seed(seed, 1, ws.client_id));
            const ClientProfile profile{1.0 + config.client_shift * rng.uniform(-1.0, 1.0), rng.uniform(0.75, 1.25),
                                        rng.uniform(0.0, kTwoPi)};
            const std::size_t n = d.min_windows + rng.below(d.max_windows - d.min_windows + 1);
            ws.values.resize(n * kWindowElems);
            ws.labels->resize(n);
            for (std::size_t w = 0; w < n; ++w) {
                const double u = rng.uniform() * cumulative.back();
                const auto k = static_cast<std::size_t>(
                    std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                const ActivityLabel label = d.classes[std::min(k, d.classes.size() - 1)];
                (*ws.labels)[w] = static_cast<int>(label);
                render_window(signature(label), profile, config.noise, rng, ws.window(w));
            }
            znormalize_in_place(ws);
            clients.push_back(std::move(ws));
        }
    }
    std::sort(clients.begin(), clients.end(),
              [](const WindowSet& a, const WindowSet& b) { return a.client_id < b.client_id; });
    return clients;
}

FederationLayout generate_synthetic_federation(const SynthConfig& config, std::uint64_t seed) {
    return build_federation(generate_synthetic_clients(config, seed), derive_seed(seed, 2));
}

}  // namespace fedae
