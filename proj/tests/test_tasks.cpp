#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "drnn/errors.hpp"
#include "drnn/tasks.hpp"

using namespace drnn;

namespace {

int argmax_input(const Matrix& m, int row) {
    int best = 0;
    for (int c = 1; c < m.cols(); ++c)
        if (m(row, c) > m(row, best)) best = c;
    return best;
}

void write_be32(std::ofstream& f, uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(buf), 4);
}

// tiny synthetic IDX pair: `count` 28x28 images with constant pixel value
void write_idx_fixture(const std::string& img_path, const std::string& lbl_path,
                       int count, bool truncate_images = false) {
    std::ofstream imgs(img_path, std::ios::binary);
    write_be32(imgs, 0x803);
    write_be32(imgs, count);
    write_be32(imgs, 28);
    write_be32(imgs, 28);
    const int pixels = truncate_images ? 100 : 784;
    for (int i = 0; i < count; ++i)
        for (int p = 0; p < pixels; ++p) imgs.put(static_cast<char>(i * 40 + 10));
    imgs.close();
    std::ofstream lbls(lbl_path, std::ios::binary);
    write_be32(lbls, 0x801);
    write_be32(lbls, count);
    for (int i = 0; i < count; ++i) lbls.put(static_cast<char>(i % 10));
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("copy-memory batch layout") {
    const CopyMemoryConfig cfg{4, 3, 99};
    const TaskBatch b = gen_copy_memory(cfg);
    CHECK(b.T == 24);  // T + 20
    CHECK(b.input_dim == 10);
    CHECK(b.num_classes == 10);
    CHECK(b.batch == 3);
    for (int ex = 0; ex < 3; ++ex) {
        // first 10 symbols in 0..7
        for (int t = 0; t < 10; ++t) {
            const int sym = argmax_input(b.inputs[t], ex);
            CHECK(sym >= 0);
            CHECK(sym <= 7);
            CHECK(b.inputs[t](ex, sym) == 1.0);
        }
        // T-1 blanks (symbol 8)
        for (int t = 10; t < 10 + 4 - 1; ++t) CHECK(b.inputs[t](ex, 8) == 1.0);
        // 11 markers (symbol 9)
        for (int t = 13; t < 24; ++t) CHECK(b.inputs[t](ex, 9) == 1.0);
        // targets repeat the prompt exactly at the masked tail
        for (int k = 0; k < 10; ++k) {
            const int t = 14 + k;
            CHECK(b.mask[t][ex] == 1);
            CHECK(b.targets[t][ex] == argmax_input(b.inputs[k], ex));
        }
        for (int t = 0; t < 14; ++t) CHECK(b.mask[t][ex] == 0);
        // inputs are one-hot: exactly one unit per step
        for (int t = 0; t < 24; ++t) {
            double s = 0.0;
            for (int c = 0; c < 10; ++c) s += b.inputs[t](ex, c);
            CHECK(s == 1.0);
        }
    }
}

TEST_CASE("copy-memory generation is seed-deterministic") {
    const TaskBatch a = gen_copy_memory({6, 2, 7});
    const TaskBatch b = gen_copy_memory({6, 2, 7});
    const TaskBatch c = gen_copy_memory({6, 2, 8});
    for (int t = 0; t < a.T; ++t) CHECK(max_abs_diff(a.inputs[t], b.inputs[t]) == 0.0);
    double diff = 0.0;
    for (int t = 0; t < a.T; ++t) diff += max_abs_diff(a.inputs[t], c.inputs[t]);
    CHECK(diff > 0.0);
}

TEST_CASE("IDX loader round-trips a synthetic fixture") {
    const std::string img = temp_path("drnn_idx_images.bin");
    const std::string lbl = temp_path("drnn_idx_labels.bin");
    write_idx_fixture(img, lbl, 3);
    const MnistData data = load_mnist_idx(img, lbl);
    CHECK(data.count == 3);
    CHECK(data.rows == 28);
    CHECK(data.cols == 28);
    CHECK(data.images[0][0] == doctest::Approx(10.0 / 255.0));
    CHECK(data.images[2][783] == doctest::Approx(90.0 / 255.0));
    CHECK(data.labels == std::vector<int>{0, 1, 2});
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}

TEST_CASE("IDX loader reports truncation and bad magic") {
    const std::string img = temp_path("drnn_idx_trunc.bin");
    const std::string lbl = temp_path("drnn_idx_trunc_lbl.bin");
    write_idx_fixture(img, lbl, 2, /*truncate_images=*/true);
    CHECK_THROWS_WITH_AS(load_mnist_idx(img, lbl),
                         doctest::Contains("byte offset"), IoError);
    {
        std::ofstream bad(img, std::ios::binary);
        write_be32(bad, 0x801);  // label magic in the image file
    }
    CHECK_THROWS_AS(load_mnist_idx(img, lbl), IoError);
    CHECK_THROWS_AS(load_mnist_idx(temp_path("drnn_missing.idx"), lbl), IoError);
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}

TEST_CASE("pixel sequences serialize row-major with noise padding") {
    std::vector<double> image(784, 0.0);
    image[0] = 1.0;
    image[28] = 0.5;  // row 1, column 0
    TaskBatch batch;
    PixelSequenceConfig cfg;
    cfg.pad_to_T = 1000;
    cfg.noise_seed = 11;
    Rng noise(cfg.noise_seed);
    append_pixel_sequence(batch, image, 7, cfg, noise);
    CHECK(batch.T == 1000);
    CHECK(batch.batch == 1);
    CHECK(batch.input_dim == 1);
    CHECK(batch.inputs[0](0, 0) == 1.0);
    CHECK(batch.inputs[28](0, 0) == 0.5);
    CHECK(batch.inputs[1](0, 0) == 0.0);
    // 216 noise steps, uniform in [0, 1)
    for (int t = 784; t < 1000; ++t) {
        CHECK(batch.inputs[t](0, 0) >= 0.0);
        CHECK(batch.inputs[t](0, 0) < 1.0);
    }
    // the label attaches only at the very last step
    for (int t = 0; t < 999; ++t) CHECK(batch.mask[t][0] == 0);
    CHECK(batch.mask[999][0] == 1);
    CHECK(batch.targets[999][0] == 7);
    CHECK(batch.num_classes == 10);
}

TEST_CASE("permutation is shared across the batch and seed-stable") {
    const auto p1 = make_pixel_permutation(784, 5);
    const auto p2 = make_pixel_permutation(784, 5);
    CHECK(p1 == p2);
    CHECK(p1 != make_pixel_permutation(784, 6));
    // a permutation, not just any map
    std::vector<int> seen(784, 0);
    for (int v : p1) {
        CHECK(v >= 0);
        CHECK(v < 784);
        ++seen[v];
    }
    for (int c : seen) CHECK(c == 1);

    std::vector<double> a(784, 0.0), b(784, 0.0);
    a[3] = 1.0;
    b[3] = 1.0;
    TaskBatch batch;
    PixelSequenceConfig cfg;
    cfg.permutation_seed = 5;
    Rng noise(0);
    append_pixel_sequence(batch, a, 1, cfg, noise);
    append_pixel_sequence(batch, b, 2, cfg, noise);
    for (int t = 0; t < 784; ++t)
        CHECK(batch.inputs[t](0, 0) == batch.inputs[t](1, 0));
}

TEST_CASE("pixel batch rejects bad indices and short pads") {
    MnistData data;
    data.count = 1;
    data.rows = 28;
    data.cols = 28;
    data.images.push_back(std::vector<double>(784, 0.0));
    data.labels.push_back(3);
    CHECK_THROWS_AS(make_pixel_batch(data, {1}, {}), IndexError);
    PixelSequenceConfig cfg;
    cfg.pad_to_T = 100;
    CHECK_THROWS_AS(make_pixel_batch(data, {0}, cfg), ConfigError);
}
