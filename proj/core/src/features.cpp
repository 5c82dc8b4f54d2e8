#include "ust/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <fmt/format.h>

namespace ust {

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width < 0 || height < 0) throw PreconditionError("negative image extent");
}

Image Image::crop(const TargetState& box) const {
  const Rect r = box.rect();
  const int x0 = std::clamp(static_cast<int>(std::ceil(r.x0 - 0.5)), 0, width_);
  const int y0 = std::clamp(static_cast<int>(std::ceil(r.y0 - 0.5)), 0, height_);
  const int x1 = std::clamp(static_cast<int>(std::ceil(r.x1 - 0.5)), 0, width_);
  const int y1 = std::clamp(static_cast<int>(std::ceil(r.y1 - 0.5)), 0, height_);
  Image out(std::max(x1 - x0, 0), std::max(y1 - y0, 0));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) out.at(x - x0, y - y0) = at(x, y);
  }
  return out;
}

namespace {

// Skips whitespace and '#' comments in a PPM header.
void skip_header_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::string magic;
  in >> magic;
  if (magic != "P6") throw IoError(fmt::format("{}: not a binary PPM (P6)", path.string()));
  int width = 0, height = 0, maxval = 0;
  skip_header_space(in);
  in >> width;
  skip_header_space(in);
  in >> height;
  skip_header_space(in);
  in >> maxval;
  if (!in || width <= 0 || height <= 0 || maxval != 255) {
    throw IoError(fmt::format("{}: unsupported PPM header", path.string()));
  }
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> raster(static_cast<std::size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size())) {
    throw IoError(fmt::format("{}: truncated raster", path.string()));
  }
  Image img(width, height);
  std::size_t i = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x, i += 3) {
      img.at(x, y) = {raster[i] / 255.0, raster[i + 1] / 255.0, raster[i + 2] / 255.0};
    }
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  auto quantize = [](double v) {
    return static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  };
  for (const Rgb& p : image.pixels()) {
    const char px[3] = {quantize(p.r), quantize(p.g), quantize(p.b)};
    out.write(px, 3);
  }
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

std::vector<double> color_histogram(const Image& patch, int bins_per_channel) {
  if (bins_per_channel < 2) throw PreconditionError("bins_per_channel must be >= 2");
  if (patch.empty()) throw PreconditionError("empty patch");
  const int b = bins_per_channel;
  auto bin = [b](double v) { return std::clamp(static_cast<int>(v * b), 0, b - 1); };
  std::vector<double> hist(static_cast<std::size_t>(b) * b * b, 0.0);
  for (const Rgb& p : patch.pixels()) {
    hist[static_cast<std::size_t>((bin(p.r) * b + bin(p.g)) * b + bin(p.b))] += 1.0;
  }
  const double total = static_cast<double>(patch.pixels().size());
  for (double& v : hist) v /= total;
  return hist;
}

FeatureProjector::FeatureProjector(Eigen::VectorXd mean, Eigen::MatrixXd basis,
                                   Eigen::VectorXd explained)
    : mean_(std::move(mean)), basis_(std::move(basis)), explained_(std::move(explained)) {
  if (mean_.size() != basis_.rows() || explained_.size() != basis_.cols() ||
      basis_.cols() > basis_.rows()) {
    throw PreconditionError("inconsistent projector shapes");
  }
}

FeatureVector FeatureProjector::project(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw PreconditionError(
        fmt::format("projector expects dimension {}, got {}", input_dim(), x.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd y = basis_.transpose() * (v - mean_);
  return FeatureVector(std::vector<double>(y.data(), y.data() + y.size()));
}

FeatureProjector pca_fit(std::span<const std::vector<double>> data, std::size_t target_dim) {
  if (data.empty()) throw PreconditionError("pca_fit: no samples");
  const std::size_t dim = data.front().size();
  if (target_dim == 0 || target_dim > dim) {
    throw PreconditionError(fmt::format("pca_fit: target dim {} invalid for input dim {}",
                                        target_dim, dim));
  }
  if (data.size() < target_dim + 1) {
    throw PreconditionError(fmt::format("pca_fit: need at least {} samples, got {}",
                                        target_dim + 1, data.size()));
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = data[static_cast<std::size_t>(i)];
    if (row.size() != dim) throw PreconditionError("pca_fit: ragged input");
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!std::isfinite(row[static_cast<std::size_t>(j)])) {
        throw PreconditionError("pca_fit: non-finite input");
      }
      x(i, j) = row[static_cast<std::size_t>(j)];
    }
  }
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  // Eigen returns ascending eigenvalues; the leading components are at the end.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigensolver failed");
  const auto k = static_cast<Eigen::Index>(target_dim);
  Eigen::MatrixXd basis(d, k);
  Eigen::VectorXd explained(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::Index src = d - 1 - c;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(c) = v;
    explained(c) = std::max(solver.eigenvalues()(src), 0.0);
  }
  return FeatureProjector(mean, basis, explained);
}

}  // namespace ust
