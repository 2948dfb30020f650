#include "fedae/param_set.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "fedae/binary_io.hpp"

namespace fedae {

void ParamSet::add(std::string name, Tensor tensor) {
    if (contains(name)) throw ShapeError("ParamSet: duplicate parameter name '" + name + "'");
    entries_.push_back(Entry{std::move(name), std::move(tensor)});
}

const Tensor* ParamSet::find(std::string_view name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
    return it == entries_.end() ? nullptr : &it->tensor;
}

Tensor* ParamSet::find(std::string_view name) {
    return const_cast<Tensor*>(static_cast<const ParamSet&>(*this).find(name));
}

const Tensor& ParamSet::at(std::string_view name) const {
    const Tensor* t = find(name);
    if (!t) throw ShapeError("ParamSet: no parameter named '" + std::string(name) + "'");
    return *t;
}

Tensor& ParamSet::at(std::string_view name) { return const_cast<Tensor&>(static_cast<const ParamSet&>(*this).at(name)); }

std::size_t ParamSet::total_params() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

bool ParamSet::same_structure(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name) return false;
        if (entries_[i].tensor.shape() != other.entries_[i].tensor.shape()) return false;
    }
    return true;
}

void ParamSet::clear_grads() {
    for (auto& e : entries_) e.tensor.clear_grad();
}

void ParamSet::set_requires_grad(bool on) {
    for (auto& e : entries_) e.tensor.set_requires_grad(on);
}

bool operator==(const ParamSet& a, const ParamSet& b) {
    if (!a.same_structure(b)) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        const auto va = a.entries_[i].tensor.values();
        const auto vb = b.entries_[i].tensor.values();
        if (!std::equal(va.begin(), va.end(), vb.begin())) return false;
    }
    return true;
}

void write_params(std::ostream& out, const ParamSet& params) {
    out.write("FAES", 4);
    binary::put_u32(out, kParamFormatVersion);
    binary::put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& e : params.entries()) {
        binary::put_string(out, e.name);
        binary::put_u32(out, static_cast<std::uint32_t>(e.tensor.rank()));
        for (std::size_t d : e.tensor.shape()) binary::put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : e.tensor.values()) binary::put_f32(out, v);
    }
    if (!out) throw DataError("write_params: stream write failed");
}

ParamSet read_params(std::istream& in) {
    binary::expect_magic(in, "FAES");
    const std::uint32_t version = binary::get_u32(in, "version");
    if (version != kParamFormatVersion) {
        throw DataError("read_params: unsupported format version " + std::to_string(version));
    }
    const std::uint32_t count = binary::get_u32(in, "entry count");
    ParamSet params;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = binary::get_string(in, 4096, "parameter name");
        const std::uint32_t rank = binary::get_u32(in, "rank");
        if (rank > 8) throw DataError("read_params: implausible rank for '" + name + "'");
        Shape shape(rank);
        for (auto& d : shape) {
            d = binary::get_u32(in, "dimension");
            if (d == 0) throw DataError("read_params: zero dimension in '" + name + "'");
        }
        const std::size_t n = shape_size(shape);
        if (n > (std::size_t{1} << 32)) throw DataError("read_params: implausible size for '" + name + "'");
        std::vector<float> values(n);
        for (auto& v : values) v = binary::get_f32(in, "values");
        try {
            params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
        } catch (const ShapeError& e) {
            throw DataError(std::string("read_params: ") + e.what());
        }
    }
    return params;
}

void save_params(const std::filesystem::path& path, const ParamSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    write_params(out, params);
}

ParamSet load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return read_params(in);
}

}  // namespace fedae
