#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drnn/matrix.hpp"

namespace drnn {

// Sequence-classification batch: the loss mask selects the timesteps where
// targets attach (the last 10 for copy memory, the final step for pixels).
struct TaskBatch {
    std::vector<Matrix> inputs;               // [t] B x input_dim
    std::vector<std::vector<int>> targets;    // [t][b]
    std::vector<std::vector<uint8_t>> mask;   // [t][b]
    int num_classes = 0;
    int input_dim = 0;
    int batch = 0;
    int T = 0;
};

struct CopyMemoryConfig {
    int T = 1;
    int batch = 1;
    uint64_t seed = 0;
};

// Length T+20 over alphabet {0..9}, one-hot inputs: 10 random symbols in
// 0..7, then T-1 eights, then 11 nines. Targets at the last 10 steps repeat
// the first 10 symbols; the mask is true exactly there.
TaskBatch gen_copy_memory(const CopyMemoryConfig& cfg);

struct MnistData {
    int count = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<double>> images;  // pixel values scaled to [0,1]
    std::vector<int> labels;
};

// IDX format, big-endian, magic 0x803 (images) / 0x801 (labels).
MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path);

struct PixelSequenceConfig {
    std::optional<uint64_t> permutation_seed;
    std::optional<int> pad_to_T;  // >= 784 when present
    uint64_t noise_seed = 0;
};

// Seeded shuffle of indices 0..n-1; the same map applies to every example.
std::vector<int> make_pixel_permutation(int n, uint64_t seed);

// Row-major serialization of one 28x28 image into a 784-step scalar sequence,
// optionally permuted and noise-padded; appends one row to batch.
void append_pixel_sequence(TaskBatch& batch, const std::vector<double>& image,
                           int label, const PixelSequenceConfig& cfg, Rng& noise_rng);

// Batch helper over a set of dataset indices.
TaskBatch make_pixel_batch(const MnistData& data, const std::vector<int>& indices,
                           const PixelSequenceConfig& cfg);

}  // namespace drnn
