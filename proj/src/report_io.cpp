#include "pmean/report_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>

namespace pmean {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open output file: " + path);
  out << content;
  if (!out) throw InputError("failed writing output file: " + path);
}

DigestBuilder& DigestBuilder::add_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 0x100000001b3ULL;
  }
  return *this;
}

DigestBuilder& DigestBuilder::add_string(const std::string& s) {
  add_u64(s.size());
  return add_bytes(s.data(), s.size());
}

DigestBuilder& DigestBuilder::add_double(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return add_u64(bits);
}

DigestBuilder& DigestBuilder::add_u64(std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  return add_bytes(b, 8);
}

std::string DigestBuilder::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h_));
  return buf;
}

std::string covariance_csv(const FluctReport& rep) {
  std::string out = "t1,t2,i,j,empirical,theoretical,stderr,zscore\n";
  for (const CovarianceEntry& e : rep.covariances) {
    out += format_g17(e.t1) + "," + format_g17(e.t2) + "," +
           std::to_string(e.i) + "," + std::to_string(e.j) + "," +
           format_g17(e.empirical) + "," + format_g17(e.theoretical) + "," +
           format_g17(e.stderr_est) + "," + format_g17(e.zscore) + "\n";
  }
  return out;
}

std::string means_csv(const FluctReport& rep) {
  std::string out = "t,i,empirical,stderr,zscore\n";
  for (const MeanEntry& e : rep.means) {
    out += format_g17(e.t) + "," + std::to_string(e.i) + "," +
           format_g17(e.empirical) + "," + format_g17(e.stderr_est) + "," +
           format_g17(e.zscore) + "\n";
  }
  return out;
}

std::string summary_json(const FluctReport& rep, const std::string& digest) {
  nlohmann::json j;
  j["pass"] = rep.pass;
  j["max_abs_z"] = rep.max_abs_z;
  j["max_abs_mean_z"] = rep.max_abs_mean_z;
  j["config_digest"] = digest;
  j["insufficient_sample"] = rep.insufficient_sample;
  j["condition"] = rep.condition;
  j["growth_constant"] = rep.c_growth;
  j["step_cap"] = rep.delta1;
  j["delta"] = rep.spec.delta;
  j["basis"] =
      "deterministic Gram-Schmidt of the ambient axes at the minimizer; "
      "moments reported in the objective-Hessian eigenbasis thereof";
  std::vector<double> lam(rep.spec.eigenvalues.data(),
                          rep.spec.eigenvalues.data() +
                              rep.spec.eigenvalues.size());
  j["hessian_eigenvalues"] = lam;
  std::vector<double> ep(rep.oracle.e_p.data(),
                         rep.oracle.e_p.data() + rep.oracle.e_p.size());
  j["oracle"] = {{"point", ep},
                 {"objective", rep.oracle.objective},
                 {"grad_norm", rep.oracle.grad_norm},
                 {"iterations", rep.oracle.iterations}};
  return j.dump(2) + "\n";
}

std::string trace_csv(const ModelSpace& s, const DiscreteMeasure& mu,
                      const ChainTrace& trace, const Point& e_p, double p) {
  std::string out = "k,t_k,rho,objective\n";
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    const double t = (k == 0) ? 0.0 : trace.steps_used[k - 1];
    const double rho = distance(s, trace.states[k], e_p);
    const double obj = objective(s, mu, trace.states[k], p);
    out += std::to_string(k) + "," + format_g17(t) + "," + format_g17(rho) +
           "," + format_g17(obj) + "\n";
  }
  return out;
}

std::string paths_csv(const std::vector<Mat>& paths,
                      const std::vector<double>& grid) {
  std::string out = "path,t,i,value\n";
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const Mat& m = paths[p];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index i = 0; i < m.cols(); ++i) {
        out += std::to_string(p) + "," + format_g17(grid[static_cast<std::size_t>(r)]) +
               "," + std::to_string(i) + "," + format_g17(m(r, i)) + "\n";
      }
    }
  }
  return out;
}

}  // namespace pmean
