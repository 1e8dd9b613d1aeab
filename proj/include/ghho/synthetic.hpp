#pragma once

#include <cstddef>
#include <cstdint>

#include "ghho/trainer.hpp"

namespace ghho {

struct BlobOptions {
  int size = 143;
  int background_max = 40;         // noise drawn from [0, background_max]
  int blob_min = 20, blob_max = 40;  // side length of the bright square
  int blob_low = 180, blob_high = 230;
};

/// Seeded toy set: positives carry one bright square on a dark noisy
/// background, negatives are background only. Labels alternate 1, 0, 1, ...
/// Items are unsplit and unprepared.
Dataset synthetic_blobs(std::size_t count, std::uint64_t seed, const BlobOptions& options = {});

}  // namespace ghho
