#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "sharpreplay/harness.hpp"
#include "sharpreplay/rng.hpp"

namespace sharpreplay {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::string& buf, std::size_t pos, const char* field,
                   const std::filesystem::path& path) {
    if (pos + 4 > buf.size()) {
        throw FormatError(path.string() + ": truncated while reading " + field);
    }
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 3]));
}

} // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    const std::string img = read_file(images_path);
    const std::string lab = read_file(labels_path);

    const std::uint32_t img_magic = be32(img, 0, "magic", images_path);
    if (img_magic != 0x00000803) {
        throw FormatError(images_path.string() + ": bad image magic 0x" +
                          std::to_string(img_magic) + ", expected 0x803");
    }
    const std::uint32_t n_images = be32(img, 4, "image count", images_path);
    const std::uint32_t h = be32(img, 8, "image rows", images_path);
    const std::uint32_t w = be32(img, 12, "image cols", images_path);
    const std::size_t pixels = static_cast<std::size_t>(n_images) * h * w;
    if (img.size() != 16 + pixels) {
        throw FormatError(images_path.string() + ": image payload has " +
                          std::to_string(img.size() - 16) + " bytes, header promises " +
                          std::to_string(pixels));
    }

    const std::uint32_t lab_magic = be32(lab, 0, "magic", labels_path);
    if (lab_magic != 0x00000801) {
        throw FormatError(labels_path.string() + ": bad label magic 0x" +
                          std::to_string(lab_magic) + ", expected 0x801");
    }
    const std::uint32_t n_labels = be32(lab, 4, "label count", labels_path);
    if (lab.size() != 8 + n_labels) {
        throw FormatError(labels_path.string() + ": label payload has " +
                          std::to_string(lab.size() - 8) + " bytes, header promises " +
                          std::to_string(n_labels));
    }
    if (n_images != n_labels) {
        throw FormatError("image count " + std::to_string(n_images) +
                          " does not match label count " + std::to_string(n_labels));
    }

    Dataset out;
    out.inputs = Tensor2(n_images, static_cast<std::size_t>(h) * w);
    out.labels.reserve(n_labels);
    for (std::size_t i = 0; i < pixels; ++i) {
        out.inputs.data[i] = static_cast<unsigned char>(img[16 + i]) / 255.0;
    }
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        const int y = static_cast<unsigned char>(lab[8 + i]);
        max_label = std::max(max_label, y);
        out.labels.push_back(y);
    }
    out.class_count = max_label + 1;
    out.image_shape = std::pair{static_cast<int>(h), static_cast<int>(w)};
    return out;
}

Dataset gen_synthetic(int class_count, int per_class, int feature_dim,
                      std::optional<std::pair<int, int>> image_shape, std::uint64_t seed) {
    if (class_count < 1 || per_class < 1 || feature_dim < 1) {
        throw ConfigError("gen_synthetic: counts and feature_dim must be >= 1");
    }
    if (image_shape) {
        const auto [h, w] = *image_shape;
        if (h < 1 || w < 1 || h * w != feature_dim) {
            throw ConfigError("gen_synthetic: image shape does not match feature_dim");
        }
    }

    std::normal_distribution<double> n01(0.0, 1.0);

    // One mean per class on a sphere of radius 2.5.
    Rng means_rng = make_stream(seed, "class-means");
    std::vector<std::vector<double>> means;
    for (int c = 0; c < class_count; ++c) {
        std::vector<double> m(static_cast<std::size_t>(feature_dim));
        for (double& v : m) v = n01(means_rng);
        const double norm = l2_norm(m);
        for (double& v : m) v = 2.5 * v / norm;
        means.push_back(std::move(m));
    }

    Dataset out;
    out.class_count = class_count;
    out.image_shape = image_shape;
    out.inputs = Tensor2(static_cast<std::size_t>(class_count) * per_class,
                         static_cast<std::size_t>(feature_dim));
    out.labels.reserve(out.inputs.rows);

    Rng noise_rng = make_stream(seed, "sample-noise");
    std::size_t row = 0;
    for (int c = 0; c < class_count; ++c) {
        for (int i = 0; i < per_class; ++i, ++row) {
            auto dst = out.inputs.row(row);
            for (int d = 0; d < feature_dim; ++d) {
                dst[static_cast<std::size_t>(d)] = means[static_cast<std::size_t>(c)]
                                                        [static_cast<std::size_t>(d)] +
                                                   0.6 * n01(noise_rng);
            }
            out.labels.push_back(c);
        }
    }

    // One global affine map onto [0,1] keeps the cluster geometry intact.
    const auto [lo_it, hi_it] = std::minmax_element(out.inputs.data.begin(), out.inputs.data.end());
    const double lo = *lo_it;
    const double span = std::max(*hi_it - lo, 1e-12);
    for (double& v : out.inputs.data) v = (v - lo) / span;
    return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& base, double test_fraction) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0) {
        throw ConfigError("split_train_test: fraction must be in (0, 1)");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < base.size(); ++r) by_class[base.labels[r]].push_back(r);

    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (auto& [label, rows] : by_class) {
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(rows.size())));
        n_test = std::min(n_test, rows.size() - 1);
        if (rows.size() >= 2) n_test = std::max<std::size_t>(n_test, 1);
        const std::size_t n_train = rows.size() - n_test;
        train_rows.insert(train_rows.end(), rows.begin(),
                          rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train),
                         rows.end());
    }

    auto subset = [&base](const std::vector<std::size_t>& rows) {
        Dataset d;
        d.class_count = base.class_count;
        d.image_shape = base.image_shape;
        d.inputs = Tensor2(rows.size(), base.feature_dim());
        d.labels.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = base.inputs.row(rows[i]);
            std::copy(src.begin(), src.end(), d.inputs.row(i).begin());
            d.labels.push_back(base.labels[rows[i]]);
        }
        return d;
    };
    return {subset(train_rows), subset(test_rows)};
}

} // namespace sharpreplay
