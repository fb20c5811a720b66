#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtln/types.hpp"

namespace dtln {

enum class Learner { Pca, Dae };
enum class ClassifierKind { Svm, WpcaCosine };

/// Full hyperparameter record. Field names mirror the key=value config keys.
struct Config {
    int patch_k1 = 7;
    int patch_k2 = 7;
    int l1 = 8;
    int l2 = 8;
    bool lcn = true;
    double lcn_c = 10.0;
    double whiten_epsilon = 0.1;
    Learner learner = Learner::Pca;
    double dae_corruption = 0.1;
    int dae_epochs = 50;
    double dae_lr = 0.01;
    double dae_tradeoff_c = 1.0;
    int dae_minibatch = 256;
    std::size_t patches_per_layer = 100000;
    int block_w = 7;
    int block_h = 7;
    int stride_x = 3;
    int stride_y = 3;
    // Optional explicit bin count; must equal 2^l1 when given.
    std::optional<std::uint32_t> bins;
    bool trans_layer = true;
    bool preprocess_at_extraction = true;
    ClassifierKind classifier = ClassifierKind::Svm;
    double svm_c = 1.0;
    int wpca_dim = 64;
    bool wpca_sqrt = false;
    std::uint64_t seed = 1;

    PatchShape patch_shape() const { return {patch_k1, patch_k2}; }
    EncoderConfig encoder() const;

    friend bool operator==(const Config&, const Config&) = default;
};

/// Every violated invariant, as human-readable messages. Empty means ok.
/// When `image_width`/`image_height` are given, block sizes are checked
/// against them.
std::vector<std::string> validate_config(const Config& config, int image_width = 0,
                                         int image_height = 0);

/// Parses flat `key = value` text. Blank lines and `#` comments are
/// ignored. Unknown keys and malformed values throw InvalidArgument.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

/// Canonical text form; parse_config(to_text(c)) == c exactly.
std::string to_text(const Config& config);

}  // namespace dtln
