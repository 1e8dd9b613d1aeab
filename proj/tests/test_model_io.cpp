#include <doctest.h>

#include <filesystem>

#include "ghho/errors.hpp"
#include "ghho/model_io.hpp"

using namespace ghho;

namespace {

Model small_model() {
  Model m;
  m.spec.input = {1, 21, 21};
  m.spec.layers = {LayerSpec::conv(4, 5, 2), LayerSpec::relu_layer(), LayerSpec::maxpool(),
                   LayerSpec::fully_connected(6, Activation::relu), LayerSpec::dropout(0.5),
                   LayerSpec::fully_connected(2, Activation::identity), LayerSpec::softmax()};
  m.weights = he_initialize(m.spec, 3);
  m.scaler.min = {1.5, 0.25, 3.0};
  m.scaler.max = {200.0 / 3.0, 9.0, 1234.5678};
  m.preprocess.equalize = true;
  m.use_otsu = false;
  return m;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ULL);
  const unsigned char a[] = {'a'};
  CHECK(fnv1a64(a, 1) == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("model round trip") {
  const Model m = small_model();
  const Model back = decode_model(encode_model(m));
  CHECK(back.spec == m.spec);
  CHECK(back.weights.flat() == m.weights.flat());
  CHECK(back.scaler.min == m.scaler.min);
  CHECK(back.scaler.max == m.scaler.max);
  CHECK(back.preprocess.equalize);
  CHECK_FALSE(back.use_otsu);

  const auto p = std::filesystem::temp_directory_path() / "ghho_model_test.bin";
  save_model(p, m);
  CHECK(load_model(p).weights.flat() == m.weights.flat());
  CHECK_THROWS_AS(load_model(p.string() + ".missing"), DataError);
}

TEST_CASE("model decoding rejects damage") {
  const std::string good = encode_model(small_model());
  CHECK_THROWS_AS(decode_model("NOT-A-MODEL 1\n"), DataError);

  std::string version = good;
  version.replace(version.find("GHHO-MODEL 1"), 12, "GHHO-MODEL 9");
  CHECK_THROWS_AS(decode_model(version), DataError);

  std::string flipped = good;
  flipped[flipped.size() - 3] ^= 0x10;
  CHECK_THROWS_AS(decode_model(flipped), DataError);

  CHECK_THROWS_AS(decode_model(good.substr(0, good.size() - 8)), DataError);

  std::string units = good;
  units.replace(units.find("fc 6 relu"), 9, "fc 7 relu");
  CHECK_THROWS_AS(decode_model(units), DataError);
}
