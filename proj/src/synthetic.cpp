#include "ghho/synthetic.hpp"

#include <string>

#include "ghho/errors.hpp"
#include "ghho/random.hpp"

namespace ghho {

Dataset synthetic_blobs(std::size_t count, std::uint64_t seed, const BlobOptions& o) {
  require(o.size > o.blob_max && o.blob_min >= 1 && o.blob_min <= o.blob_max,
          "synthetic_blobs: blob must fit inside the image");
  Dataset data;
  data.items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::substream(seed, 0x5E7, 0, i);
    const auto pick = [&](int lo, int hi) {
      return lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    Sample s;
    s.id = "synth_" + std::to_string(i);
    s.label = i % 2 == 0 ? 1 : 0;
    s.image.resize(o.size, o.size);
    for (Eigen::Index k = 0; k < s.image.size(); ++k)
      s.image.data()[k] = static_cast<std::uint8_t>(pick(0, o.background_max));
    if (s.label == 1) {
      const int side = pick(o.blob_min, o.blob_max);
      const int top = pick(0, o.size - side), left = pick(0, o.size - side);
      for (int y = top; y < top + side; ++y)
        for (int x = left; x < left + side; ++x)
          s.image(y, x) = static_cast<std::uint8_t>(pick(o.blob_low, o.blob_high));
    }
    data.items.push_back(std::move(s));
  }
  return data;
}

}  // namespace ghho
