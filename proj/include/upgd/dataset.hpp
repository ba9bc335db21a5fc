#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/learn.hpp"

namespace upgd {

/// Everything needed to regenerate a dataset bit-exactly.
struct DatasetHeader {
  SystemParams sys;
  Geometry geo;
  std::uint64_t seed = 0;
  std::size_t count = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Realization> realizations;
};

/// Seed of sample `index`, mixed from the dataset seed.
std::uint64_t sample_seed(std::uint64_t dataset_seed, std::size_t index);

Dataset generate_dataset(const DatasetHeader& header);

/// File layout: one line of JSON (format, version, header fields), a
/// newline, then count * K * N_t complex entries as little-endian 64-bit
/// floats (real, imaginary), row-major per sample.
void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// Realizations with their constraint constants and default starting points.
std::vector<Sample> make_samples(const Dataset& ds);

}  // namespace upgd
