#include "mixscale/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace mixscale {
namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_real(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw InputError("checkpoint: bad real '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& key) {
  std::string token;
  if (!(in >> token) || token != key)
    throw InputError("checkpoint: expected '" + key + "', found '" + token + "'");
}

template <typename T>
T read_value(std::istream& in) {
  T v{};
  if (!(in >> v)) throw InputError("checkpoint: truncated file");
  return v;
}

double read_real(std::istream& in) { return parse_real(read_value<std::string>(in)); }

void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index l = 0; l < v.size(); ++l) out << ' ' << hex(v(l));
}

Vector read_vector(std::istream& in, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index l = 0; l < size; ++l) v(l) = read_real(in);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ChainState& s) {
  const auto q = static_cast<Eigen::Index>(s.cov.q());
  out << "mixscale-checkpoint " << kCheckpointVersion << '\n';
  out << "iteration " << s.iteration << '\n';
  out << "n " << s.mixture.n() << " q " << q << " r " << s.mixture.r() << '\n';
  out << "hyper " << hex(s.hyper.a) << ' ' << hex(s.hyper.b) << '\n';
  out << "base";
  write_vector(out, s.base.variances);
  out << "\nfree";
  for (bool f : s.cov.free) out << ' ' << (f ? 1 : 0);
  out << "\nsd";
  write_vector(out, s.cov.sd);
  out << "\ncorr";
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < q; ++b) out << ' ' << hex(s.cov.corr(a, b));
  out << "\nlabels";
  for (int l : s.mixture.labels) out << ' ' << l;
  out << "\ncounts";
  for (int c : s.mixture.counts) out << ' ' << c;
  out << '\n';
  for (const auto& c : s.mixture.centers) {
    out << "center";
    write_vector(out, c);
    out << '\n';
  }
  out << "latents\n";
  for (Eigen::Index i = 0; i < s.latents.z.rows(); ++i) {
    for (Eigen::Index l = 0; l < q; ++l) out << (l ? " " : "") << hex(s.latents.z(i, l));
    out << '\n';
  }
  out << "rng " << s.rng << '\n';
  out << "end\n";
}

ChainState read_checkpoint(std::istream& in) {
  expect(in, "mixscale-checkpoint");
  if (read_value<int>(in) != kCheckpointVersion) throw InputError("checkpoint: unsupported version");
  ChainState s;
  expect(in, "iteration");
  s.iteration = read_value<std::size_t>(in);
  expect(in, "n");
  const auto n = read_value<std::size_t>(in);
  expect(in, "q");
  const auto q = read_value<Eigen::Index>(in);
  expect(in, "r");
  const auto r = read_value<std::size_t>(in);
  expect(in, "hyper");
  s.hyper.a = read_real(in);
  s.hyper.b = read_real(in);
  expect(in, "base");
  s.base.variances = read_vector(in, q);
  expect(in, "free");
  std::vector<bool> free;
  for (Eigen::Index l = 0; l < q; ++l) free.push_back(read_value<int>(in) != 0);
  expect(in, "sd");
  Vector sd = read_vector(in, q);
  expect(in, "corr");
  Matrix corr(q, q);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < q; ++b) corr(a, b) = read_real(in);
  s.cov.free = std::move(free);
  s.cov.sd = std::move(sd);
  s.cov.corr = std::move(corr);
  if (!s.cov.refresh()) throw InputError("checkpoint: stored covariance is not positive definite");

  expect(in, "labels");
  s.mixture.labels.resize(n);
  for (auto& l : s.mixture.labels) l = read_value<int>(in);
  expect(in, "counts");
  s.mixture.counts.resize(r);
  for (auto& c : s.mixture.counts) c = read_value<int>(in);
  for (std::size_t c = 0; c < r; ++c) {
    expect(in, "center");
    s.mixture.centers.push_back(read_vector(in, q));
  }
  expect(in, "latents");
  s.latents.z.resize(static_cast<Eigen::Index>(n), q);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
    for (Eigen::Index l = 0; l < q; ++l) s.latents.z(i, l) = read_real(in);
  expect(in, "rng");
  if (!(in >> s.rng)) throw InputError("checkpoint: bad engine state");
  expect(in, "end");
  check_mixture(s.mixture);
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const ChainState& state) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  write_checkpoint(out, state);
}

ChainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace mixscale
