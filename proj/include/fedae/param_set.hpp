#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedae/tensor.hpp"

namespace fedae {

/// Ordered, uniquely named model parameters. Copies are deep.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    ParamSet() = default;

    /// Appends a parameter; names must be unique.
    void add(std::string name, Tensor tensor);

    const Tensor& at(std::string_view name) const;
    Tensor& at(std::string_view name);
    const Tensor* find(std::string_view name) const;
    Tensor* find(std::string_view name);
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    std::vector<Entry>& entries() noexcept { return entries_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    std::size_t total_params() const;
    /// Value bytes only: 4 per float32 parameter.
    std::size_t byte_size() const { return 4 * total_params(); }

    /// Same names, order and shapes.
    bool same_structure(const ParamSet& other) const;

    void clear_grads();
    void set_requires_grad(bool on);

    /// Values only; gradients and flags are ignored.
    friend bool operator==(const ParamSet& a, const ParamSet& b);

private:
    std::vector<Entry> entries_;
};

/// Binary checkpoint: "FAES", u32 version, u32 entry count, then per entry
/// u32 name length, name bytes, u32 rank, u32 dims, f32 values; all
/// little-endian.
inline constexpr std::uint32_t kParamFormatVersion = 1;

void write_params(std::ostream& out, const ParamSet& params);
ParamSet read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_params(const std::filesystem::path& path);

}  // namespace fedae
