#include <gtest/gtest.h>

#include "birkhoff/io.hpp"
#include "birkhoff/presets.hpp"

using namespace birkhoff;

namespace {

// Returns the field path of the spec error raised by parsing `text`.
std::string error_path(const std::string& text) {
  try {
    io::parse_spec_text(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Spec);
    return e.path();
  }
  return "<no error>";
}

const char* kDirichlet = R"({
  "label": "dirichlet", "order": 2,
  "boundary": {"a": [[1, 0], [0, 0]], "b": [[0, 0], [1, 0]]}
})";

}  // namespace

TEST(ParseSpec, DirichletWithBareNumbers) {
  const auto spec = io::parse_spec_text(kDirichlet);
  EXPECT_EQ(spec.label, "dirichlet");
  EXPECT_EQ(spec.expression.order(), 2);
  EXPECT_EQ(spec.boundary.a(0, 0), Complex(1.0, 0.0));
  EXPECT_EQ(spec.boundary.b(1, 0), Complex(1.0, 0.0));
}

TEST(ParseSpec, DuplicateRowIsRankDeficient) {
  try {
    io::parse_spec_text(R"({"order": 2, "boundary": {"a": [[1, 0], [1, 0]], "b": [[0, 0], [0, 0]]}})");
    FAIL() << "accepted a rank deficient boundary";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("rank deficient"), std::string::npos) << e.what();
  }
}

TEST(ParseSpec, RowCountMustMatchOrder) {
  EXPECT_EQ(error_path(R"({"order": 3, "boundary": {"a": [[1, 0, 0], [0, 1, 0]], "b": [[0, 0, 0], [0, 0, 0]]}})"),
            "boundary.a");
}

TEST(ParseSpec, FieldPaths) {
  EXPECT_EQ(error_path(R"({"boundary": {}})"), "order");
  EXPECT_EQ(error_path(R"({"order": 0, "boundary": {}})"), "order");
  EXPECT_EQ(error_path(R"({"order": 2, "boundary": {"a": [[1, 0], [0, 0]]}})"), "boundary.b");
  EXPECT_EQ(error_path(R"({"order": 2, "boundary": {"a": [[1, 0], [0, "x"]], "b": [[0, 0], [1, 0]]}})"),
            "boundary.a[1][1]");
  EXPECT_EQ(error_path(R"({"order": 2, "boundary": {"a": [[1, 0], [0, [1]]], "b": [[0, 0], [1, 0]]}})"),
            "boundary.a[1][1]");
  const std::string bc = R"("boundary": {"a": [[1, 0], [0, 0]], "b": [[0, 0], [1, 0]]})";
  EXPECT_EQ(error_path(R"({"order": 2, "coefficients": [{"k": 1, "kind": "poly", "values": [1]}], )" + bc + "}"),
            "coefficients[0].k");
  EXPECT_EQ(error_path(R"({"order": 2, "coefficients": [{"k": 0, "kind": "spline", "values": [1]}], )" + bc + "}"),
            "coefficients[0].kind");
  EXPECT_EQ(error_path(R"({"order": 2, "coefficients": [{"k": 0, "kind": "poly", "values": [1, "a"]}], )" + bc + "}"),
            "coefficients[0].values[1]");
  EXPECT_EQ(error_path(R"({"order": 2, "coefficients": [{"k": 0, "kind": "samples", "values": [1]}], )" + bc + "}"),
            "coefficients[0].values");
  EXPECT_EQ(error_path(R"({"order": 3, "coefficients": [{"k": 0, "kind": "poly", "values": [1]},
                                                         {"k": 0, "kind": "poly", "values": [2]}],
                           "boundary": {"a": [[1,0,0],[0,1,0],[0,0,0]], "b": [[0,0,0],[0,0,0],[1,0,0]]}})"),
            "coefficients[1].k");
}

TEST(ParseSpec, MalformedJson) {
  EXPECT_EQ(error_path("{\"order\": 2,"), "$");
  EXPECT_EQ(error_path("[1, 2]"), "$");
}

TEST(ParseSpec, MissingFile) {
  try {
    io::load_spec("/nonexistent/spec.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Spec);
    EXPECT_EQ(e.path(), "spec");
  }
}

// Serialization followed by parsing reproduces every double bit for bit.
TEST(RoundTrip, BitExact) {
  BvpSpec spec = presets::third_order();
  spec.expression.set(0, Coefficient::poly({Complex(1.0 / 3.0, -2.0 / 7.0), Complex(0.1, 1e-300)}));
  spec.expression.set(1, Coefficient::samples({0.1, Complex(0.2, std::nextafter(0.3, 1.0)), 0.7}));
  spec.boundary.b(2, 1) = Complex(std::sqrt(2.0), -std::exp(1.0));
  const auto text = io::to_json(spec).dump();
  const auto back = io::parse_spec_text(text);
  EXPECT_EQ(back.label, spec.label);
  EXPECT_TRUE((back.boundary.a.array() == spec.boundary.a.array()).all());
  EXPECT_TRUE((back.boundary.b.array() == spec.boundary.b.array()).all());
  for (int k = 0; k <= 1; ++k) {
    const auto& c0 = spec.expression.coefficients()[static_cast<std::size_t>(k)];
    const auto& c1 = back.expression.coefficients()[static_cast<std::size_t>(k)];
    EXPECT_EQ(c0.kind(), c1.kind());
    EXPECT_EQ(c0.values(), c1.values());
  }
  EXPECT_EQ(io::to_json(back).dump(), text);
}

TEST(Pretty, ParsesBackUnchanged) {
  BvpSpec spec = presets::fourth_order_clamped();
  spec.expression.set(1, Coefficient::poly({Complex(1.0 / 3.0, -1e-300), 0.1}));
  const auto doc = io::to_json(spec);
  const auto text = io::pretty(doc);
  EXPECT_EQ(io::Json::parse(text), doc);
  EXPECT_NE(text.find("[0.0, 0.0]"), std::string::npos);
  EXPECT_EQ(io::pretty(io::Json::object()), "{}\n");
  EXPECT_EQ(io::pretty(io::Json::parse(R"({"a": [{"b": []}]})")), "{\n  \"a\": [\n    {\n      \"b\": []\n    }\n  ]\n}\n");
}
