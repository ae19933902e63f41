// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace curio::testing {

bool rel_close(double a, double b, double rel, double abs_floor) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= std::max(rel * scale, abs_floor);
}

double normal(SplitMix64& rng) {
  double u1 = rng.unit();
  while (u1 <= 0.0) u1 = rng.unit();
  const double u2 = rng.unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Grid random_grid(SplitMix64& rng, std::size_t rows, std::size_t cols, int levels) {
  Grid g(rows, std::vector<double>(cols));
  for (auto& row : g)
    for (auto& v : row) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
  return g;
}

double brute_laplacian_variance(const Grid& g) {
  const std::size_t rows = g.size(), cols = g.empty() ? 0 : g[0].size();
  std::vector<double> resp;
  for (std::size_t k = 0; k < (rows - 2) * (cols - 2); ++k) {
    const std::size_t r = 1 + k / (cols - 2), c = 1 + k % (cols - 2);
    resp.push_back(g[r - 1][c] + g[r + 1][c] + g[r][c - 1] + g[r][c + 1] - 4.0 * g[r][c]);
  }
  double mean = 0.0;
  for (double v : resp) mean += v;
  mean /= static_cast<double>(resp.size());
  double var = 0.0;
  for (double v : resp) var += (v - mean) * (v - mean);
  return var / static_cast<double>(resp.size());
}

double brute_entropy(const Grid& g) {
  std::vector<double> counts(256, 0.0);
  double n = 0.0;
  for (const auto& row : g)
    for (double v : row) {
      counts[static_cast<std::size_t>(v)] += 1.0;
      n += 1.0;
    }
  double h = 0.0;
  for (double c : counts)
    if (c > 0) h += (c / n) * std::log2(n / c);
  return h;
}

GrayImage to_gray_image(const Grid& g) {
  GrayImage img(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g[0].size()));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      img(r, c) = static_cast<std::uint8_t>(g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  return img;
}

Eigen::MatrixXd gaussian_columns(SplitMix64& rng, Eigen::Index dim, Eigen::Index count) {
  Eigen::MatrixXd m(dim, count);
  for (Eigen::Index j = 0; j < count; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) m(i, j) = normal(rng);
  return m;
}

Eigen::VectorXd at_cosine(SplitMix64& rng, const Eigen::VectorXd& base, double cosine) {
  Eigen::VectorXd u = base.normalized();
  Eigen::VectorXd w = gaussian_columns(rng, base.size(), 1).col(0);
  w -= w.dot(u) * u;
  w.normalize();
  return cosine * u + std::sqrt(std::max(0.0, 1.0 - cosine * cosine)) * w;
}

PlantedSet planted_duplicates(SplitMix64& rng, Eigen::Index dim, std::size_t count, std::size_t planted,
                              double min_cosine) {
  if (planted * 2 > count) throw std::invalid_argument("too many planted copies");
  PlantedSet s;
  s.vectors = gaussian_columns(rng, dim, static_cast<Eigen::Index>(count));
  // Copies go to the back half; each copies a distinct original from the front half.
  std::vector<std::size_t> back(count - count / 2);
  for (std::size_t i = 0; i < back.size(); ++i) back[i] = count / 2 + i;
  seeded_shuffle(std::span(back), rng);
  std::vector<std::size_t> front(count / 2);
  for (std::size_t i = 0; i < front.size(); ++i) front[i] = i;
  seeded_shuffle(std::span(front), rng);
  for (std::size_t k = 0; k < planted; ++k) {
    const double c = min_cosine + (1.0 - min_cosine) * rng.unit();
    s.vectors.col(static_cast<Eigen::Index>(back[k])) =
        at_cosine(rng, s.vectors.col(static_cast<Eigen::Index>(front[k])), c);
    s.copies.push_back(back[k]);
  }
  std::sort(s.copies.begin(), s.copies.end());
  return s;
}

Manifest random_manifest(SplitMix64& rng, std::size_t count) {
  Manifest m;
  for (std::size_t i = 0; i < count; ++i) {
    ImageRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "r%06zu", i);
    r.id = id;
    r.path = r.id + ".png";
    r.width = 256 + static_cast<std::int64_t>(rng.below(1793));
    r.height = 256 + static_cast<std::int64_t>(rng.below(1793));
    r.source = kAllSources[rng.below(kAllSources.size())];
    r.caption = "caption " + std::to_string(i);
    m.records.push_back(std::move(r));
  }
  return m;
}

NumericCdf::NumericCdf(const std::function<double(double)>& pdf, std::size_t intervals) {
  if (intervals % 2) ++intervals;
  const double h = 1.0 / static_cast<double>(intervals);
  auto f = [&](double t) { return t <= 0.0 || t >= 1.0 ? 0.0 : pdf(t); };
  grid_.push_back(0.0);
  cum_.push_back(0.0);
  for (std::size_t i = 0; i < intervals; i += 2) {
    const double a = static_cast<double>(i) * h;
    const double panel = h / 3.0 * (f(a) + 4.0 * f(a + h) + f(a + 2.0 * h));
    grid_.push_back(a + 2.0 * h);
    cum_.push_back(cum_.back() + panel);
  }
}

double NumericCdf::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return cum_.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto i = static_cast<std::size_t>(it - grid_.begin()) - 1;
  const double w = (t - grid_[i]) / (grid_[i + 1] - grid_[i]);
  return cum_[i] + w * (cum_[i + 1] - cum_[i]);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

TempDir::TempDir() {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() / ("curio-test-" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace curio::testing
