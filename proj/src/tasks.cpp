#include "drnn/tasks.hpp"

#include <cstdint>
#include <fstream>

#include "drnn/errors.hpp"

namespace drnn {
namespace {

constexpr int kCopyAlphabet = 10;
constexpr int kBlank = 8;
constexpr int kMarker = 9;

}  // namespace

TaskBatch gen_copy_memory(const CopyMemoryConfig& cfg) {
    if (cfg.T < 1) throw ConfigError("copy memory: T must be >= 1");
    if (cfg.batch < 1) throw ConfigError("copy memory: batch must be >= 1");
    const int total = cfg.T + 20;
    TaskBatch batch;
    batch.num_classes = kCopyAlphabet;
    batch.input_dim = kCopyAlphabet;
    batch.batch = cfg.batch;
    batch.T = total;
    batch.inputs.assign(total, Matrix(cfg.batch, kCopyAlphabet));
    batch.targets.assign(total, std::vector<int>(cfg.batch, 0));
    batch.mask.assign(total, std::vector<uint8_t>(cfg.batch, 0));

    Rng rng(cfg.seed);
    for (int b = 0; b < cfg.batch; ++b) {
        std::vector<int> symbols(10);
        for (int& s : symbols) s = rng.uniform_int(8);
        for (int t = 0; t < total; ++t) {
            int sym;
            if (t < 10)
                sym = symbols[t];
            else if (t < 10 + cfg.T - 1)
                sym = kBlank;
            else
                sym = kMarker;
            batch.inputs[t](b, sym) = 1.0;
        }
        for (int k = 0; k < 10; ++k) {
            const int t = total - 10 + k;
            batch.targets[t][b] = symbols[k];
            batch.mask[t][b] = 1;
        }
    }
    return batch;
}

namespace {

uint32_t read_be_u32(std::ifstream& f, const std::string& path, long offset) {
    unsigned char buf[4];
    if (!f.read(reinterpret_cast<char*>(buf), 4))
        throw IoError("IDX file '" + path + "': truncated at byte offset " +
                      std::to_string(offset));
    return (static_cast<uint32_t>(buf[0]) << 24) | (static_cast<uint32_t>(buf[1]) << 16) |
           (static_cast<uint32_t>(buf[2]) << 8) | static_cast<uint32_t>(buf[3]);
}

}  // namespace

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IoError("cannot open IDX image file '" + images_path + "'");
    std::ifstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw IoError("cannot open IDX label file '" + labels_path + "'");

    const uint32_t img_magic = read_be_u32(imgs, images_path, 0);
    if (img_magic != 0x00000803)
        throw IoError("IDX file '" + images_path + "': bad image magic at byte offset 0");
    const int count = static_cast<int>(read_be_u32(imgs, images_path, 4));
    const int rows = static_cast<int>(read_be_u32(imgs, images_path, 8));
    const int cols = static_cast<int>(read_be_u32(imgs, images_path, 12));

    const uint32_t lbl_magic = read_be_u32(lbls, labels_path, 0);
    if (lbl_magic != 0x00000801)
        throw IoError("IDX file '" + labels_path + "': bad label magic at byte offset 0");
    const int lbl_count = static_cast<int>(read_be_u32(lbls, labels_path, 4));
    if (lbl_count != count)
        throw IoError("IDX files disagree: " + std::to_string(count) + " images vs " +
                      std::to_string(lbl_count) + " labels");

    MnistData data;
    data.count = count;
    data.rows = rows;
    data.cols = cols;
    const int pixels = rows * cols;
    std::vector<unsigned char> raw(pixels);
    data.images.reserve(count);
    for (int i = 0; i < count; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(raw.data()), pixels))
            throw IoError("IDX file '" + images_path + "': truncated at byte offset " +
                          std::to_string(16 + static_cast<long>(i) * pixels));
        std::vector<double> img(pixels);
        for (int p = 0; p < pixels; ++p) img[p] = raw[p] / 255.0;
        data.images.push_back(std::move(img));
    }
    std::vector<unsigned char> lraw(count);
    if (!lbls.read(reinterpret_cast<char*>(lraw.data()), count))
        throw IoError("IDX file '" + labels_path + "': truncated at byte offset 8");
    data.labels.assign(lraw.begin(), lraw.end());
    return data;
}

std::vector<int> make_pixel_permutation(int n, uint64_t seed) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = rng.uniform_int(i + 1);
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

void append_pixel_sequence(TaskBatch& batch, const std::vector<double>& image,
                           int label, const PixelSequenceConfig& cfg, Rng& noise_rng) {
    const int pixels = static_cast<int>(image.size());
    if (pixels != 28 * 28)
        throw ConfigError("pixel sequence: image must be 28x28");
    const int total = cfg.pad_to_T.value_or(pixels);
    if (total < pixels)
        throw ConfigError("pixel sequence: pad_to_T must be >= 784");

    if (batch.T == 0) {
        batch.T = total;
        batch.num_classes = 10;
        batch.input_dim = 1;
        batch.inputs.assign(total, Matrix(0, 1));
        batch.targets.assign(total, {});
        batch.mask.assign(total, {});
    }
    if (batch.T != total)
        throw ConfigError("pixel sequence: inconsistent sequence lengths in batch");

    std::vector<double> seq(image);
    if (cfg.permutation_seed) {
        const auto perm = make_pixel_permutation(pixels, *cfg.permutation_seed);
        for (int p = 0; p < pixels; ++p) seq[p] = image[perm[p]];
    }
    for (int p = pixels; p < total; ++p) seq.push_back(noise_rng.uniform());

    const int b = batch.batch;
    for (int t = 0; t < total; ++t) {
        Matrix grown(b + 1, 1);
        for (int r = 0; r < b; ++r) grown(r, 0) = batch.inputs[t](r, 0);
        grown(b, 0) = seq[t];
        batch.inputs[t] = std::move(grown);
        batch.targets[t].push_back(t == total - 1 ? label : 0);
        batch.mask[t].push_back(t == total - 1 ? 1 : 0);
    }
    batch.batch = b + 1;
}

TaskBatch make_pixel_batch(const MnistData& data, const std::vector<int>& indices,
                           const PixelSequenceConfig& cfg) {
    TaskBatch batch;
    Rng noise(cfg.noise_seed);
    for (int idx : indices) {
        if (idx < 0 || idx >= data.count)
            throw IndexError("pixel batch: image index out of range");
        append_pixel_sequence(batch, data.images[idx], data.labels[idx], cfg, noise);
    }
    return batch;
}

}  // namespace drnn
