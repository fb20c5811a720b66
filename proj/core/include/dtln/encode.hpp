#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtln/types.hpp"

namespace dtln {

struct BinaryMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

/// Integer map of packed bits; every code is below `bins`.
struct CodeMap {
    int width = 0;
    int height = 0;
    std::uint32_t bins = 256;
    std::vector<std::uint16_t> codes;

    std::uint16_t at(int row, int col) const { return codes[static_cast<std::size_t>(row) * width + col]; }

    friend bool operator==(const CodeMap&, const CodeMap&) = default;
};

struct BinaryStack {
    std::vector<BinaryMap> layer1;
    std::vector<std::vector<BinaryMap>> layer2;  // [first-layer i][second-layer j]
};

/// 1 where the response is strictly positive, else 0.
BinaryMap binarize(const FeatureMap& map);
BinaryStack binarize(const FeatureMapStack& stack);

/// Packs groups of L1 binary maps into code maps. Group 0 holds the
/// first-layer maps (omitted without the trans-layer connection); group j
/// holds layer2[i][j-1] over i. Within a group, first-layer index i
/// (0-based) carries bit weight 2^(L1-1-i), so index 0 is the MSB.
std::vector<CodeMap> compress_groups(const BinaryStack& stack, bool trans_layer);

/// Packs one group; maps[i] contributes bit 2^(n-1-i).
CodeMap pack_group(std::span<const BinaryMap* const> maps);

struct Block {
    int x = 0;  // column of the top-left corner
    int y = 0;  // row of the top-left corner
    int w = 0;
    int h = 0;

    friend bool operator==(const Block&, const Block&) = default;
};

/// Blocks with corners (a*stride_x, b*stride_y), listed row-major (b outer).
std::vector<Block> partition_blocks(int map_width, int map_height, const EncoderConfig& encoder);

/// Concatenated per-block histograms over `bins` code values, ordered by
/// (map, block). dim = maps * blocks * bins.
HistogramFeature feature_of(std::span<const CodeMap> code_maps, const EncoderConfig& encoder);

}  // namespace dtln
