#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtln/encode.hpp"
#include "dtln/model.hpp"
#include "dtln/types.hpp"

namespace dtln {

/// Malformed or unreadable input file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model container problems: bad magic, unsupported version, truncation,
/// or a per-section checksum mismatch (the message names the section).
class ModelFormatError : public IoError {
public:
    using IoError::IoError;
};

/// Big-endian IDX pair: images (magic 0x00000803, u8 pixels scaled by
/// 1/255) and labels (magic 0x00000801).
LabeledImages read_idx(const std::string& images_path, const std::string& labels_path);
void write_idx(const LabeledImages& data, const std::string& images_path,
               const std::string& labels_path);

/// amat text: one sample per line, 784 pixel reals (28x28 row-major) then
/// an integral label.
LabeledImages read_amat(const std::string& path);
LabeledImages read_amat(std::istream& in, const std::string& name = "<stream>");
void write_amat(const LabeledImages& data, std::ostream& out);

/// Picks a reader by path: *.amat -> amat; otherwise an IDX images file
/// whose labels file is found by replacing "images-idx3" with "labels-idx1".
LabeledImages read_dataset(const std::string& path);

/// DTLNMDL1 container: magic, then tagged sections
/// (tag[4], u64 length, payload, u32 CRC32 of payload), little-endian.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const std::string& bytes);

/// Binary PGM (P5). Real maps are min-max scaled to 0..255 (constant maps
/// become 128); code maps are scaled by 255 / (bins - 1).
void dump_map_pgm(const FeatureMap& map, const std::string& path);
void dump_map_pgm(const CodeMap& map, const std::string& path);
std::vector<std::uint8_t> pgm_bytes(const FeatureMap& map);
std::vector<std::uint8_t> pgm_bytes(const CodeMap& map);

/// Sparse feature text: `label idx:count ...`, 1-based ascending indices.
void write_sparse_feature(std::ostream& out, int label, const HistogramFeature& feature);
struct LabeledFeature {
    int label = 0;
    HistogramFeature feature;
};
/// Reads all lines; `dim` is the feature dimension to assign (0 = largest
/// index seen).
std::vector<LabeledFeature> read_sparse_features(std::istream& in, std::size_t dim = 0);

}  // namespace dtln
