#include <doctest.h>

#include <sstream>

#include "fedae/param_set.hpp"
#include "fedae/tensor.hpp"

using namespace fedae;

TEST_CASE("tensor construction and shape checks") {
    Tensor t(Shape{2, 3}, 1.5f);
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.dim(1) == 3);
    CHECK(t[5] == 1.5f);
    CHECK_FALSE(t.has_grad());

    CHECK_THROWS_AS(Tensor(Shape{2, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(t.item(), ShapeError);
    CHECK(Tensor::scalar(4.0f).item() == 4.0f);
    CHECK(Tensor::scalar(4.0f).rank() == 0);
}

TEST_CASE("tensor gradients and reshaping") {
    Tensor t(Shape{4}, std::vector<float>{1, 2, 3, 4});
    t.ensure_grad()[2] = 7.0f;
    CHECK(t.has_grad());
    CHECK(t.grad()[2] == 7.0f);
    CHECK_THROWS_AS(t.set_grad({1.0f}), ShapeError);
    t.clear_grad();
    CHECK_FALSE(t.has_grad());

    const Tensor r = t.reshaped(Shape{2, 2});
    CHECK(r.shape() == Shape{2, 2});
    CHECK(r[3] == 4.0f);
    CHECK_THROWS_AS(t.reshaped(Shape{3}), ShapeError);

    const Tensor64 d = t.cast<double>();
    CHECK(d[1] == 2.0);
    CHECK(shape_string(Shape{6, 128}) == "[6,128]");
}

namespace {

ParamSet sample_params() {
    ParamSet p;
    p.add("a.weight", Tensor(Shape{2, 3}, std::vector<float>{1, -2, 3.25f, 4, 5, 6}));
    p.add("a.bias", Tensor(Shape{2}, std::vector<float>{0.5f, -0.125f}));
    return p;
}

}  // namespace

TEST_CASE("param set bookkeeping") {
    ParamSet p = sample_params();
    CHECK(p.total_params() == 8);
    CHECK(p.byte_size() == 32);
    CHECK(p.contains("a.bias"));
    CHECK_FALSE(p.contains("b"));
    CHECK_THROWS(p.add("a.bias", Tensor(Shape{1})));
    CHECK_THROWS(p.at("missing"));

    ParamSet q = sample_params();
    CHECK(p == q);
    CHECK(p.same_structure(q));
    q.at("a.bias")[0] = 9.0f;
    CHECK_FALSE(p == q);
    CHECK(p.same_structure(q));

    ParamSet reordered;
    reordered.add("a.bias", p.at("a.bias"));
    reordered.add("a.weight", p.at("a.weight"));
    CHECK_FALSE(p.same_structure(reordered));
}

TEST_CASE("param checkpoint round trip") {
    const ParamSet p = sample_params();
    std::stringstream buf;
    write_params(buf, p);
    const std::string bytes = buf.str();
    // magic, version, count, then "a.weight" entry header.
    CHECK(bytes.substr(0, 4) == "FAES");
    CHECK(static_cast<unsigned char>(bytes[4]) == kParamFormatVersion);
    CHECK(static_cast<unsigned char>(bytes[8]) == 2);
    const std::size_t expected = 12 + (4 + 8 + 4 + 8 + 24) + (4 + 6 + 4 + 4 + 8);
    CHECK(bytes.size() == expected);

    std::stringstream in(bytes);
    const ParamSet back = read_params(in);
    CHECK(back == p);
    CHECK(back.same_structure(p));

    std::stringstream again;
    write_params(again, back);
    CHECK(again.str() == bytes);
}

TEST_CASE("param checkpoint rejects damaged input") {
    std::stringstream buf;
    write_params(buf, sample_params());
    std::string bytes = buf.str();

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream a(bad_magic);
    CHECK_THROWS_AS(read_params(a), DataError);

    std::stringstream b(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_params(b), DataError);

    std::string bad_version = bytes;
    bad_version[4] = 9;
    std::stringstream c(bad_version);
    CHECK_THROWS_AS(read_params(c), DataError);
}
