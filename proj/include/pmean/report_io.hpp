#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmean/fluctuation.hpp"

namespace pmean {

// %.17g: enough digits to round-trip any double exactly, so re-running an
// experiment can be checked byte-for-byte.
std::string format_g17(double v);

void write_text_file(const std::string& path, const std::string& content);

// Streaming 64-bit FNV-1a digest, used to fingerprint experiment inputs.
class DigestBuilder {
 public:
  DigestBuilder& add_bytes(const void* data, std::size_t n);
  DigestBuilder& add_string(const std::string& s);
  DigestBuilder& add_double(double v);
  DigestBuilder& add_u64(std::uint64_t v);
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string covariance_csv(const FluctReport& rep);
std::string means_csv(const FluctReport& rep);
std::string summary_json(const FluctReport& rep, const std::string& digest);

// Per-step chain record: k, t_k, distance to the reference minimizer and
// objective value at X_k.
std::string trace_csv(const ModelSpace& s, const DiscreteMeasure& mu,
                      const ChainTrace& trace, const Point& e_p, double p);

// Long-format path dump: path, t, coordinate index, value.
std::string paths_csv(const std::vector<Mat>& paths,
                      const std::vector<double>& grid);

}  // namespace pmean
