#include "dtln/encode.hpp"

#include <algorithm>

namespace dtln {

BinaryMap binarize(const FeatureMap& map) {
    BinaryMap out{map.width, map.height, std::vector<std::uint8_t>(map.size())};
    for (std::size_t i = 0; i < map.size(); ++i) out.bits[i] = map.pixels[i] > 0.0 ? 1 : 0;
    return out;
}

BinaryStack binarize(const FeatureMapStack& stack) {
    BinaryStack out;
    out.layer1.reserve(stack.layer1.size());
    for (const auto& m : stack.layer1) out.layer1.push_back(binarize(m));
    out.layer2.resize(stack.layer2.size());
    for (std::size_t i = 0; i < stack.layer2.size(); ++i)
        for (const auto& m : stack.layer2[i]) out.layer2[i].push_back(binarize(m));
    return out;
}

CodeMap pack_group(std::span<const BinaryMap* const> maps) {
    if (maps.empty() || maps.size() > 16) throw InvalidArgument("compress_groups: group size must be 1..16");
    const int w = maps.front()->width;
    const int h = maps.front()->height;
    CodeMap out{w, h, std::uint32_t{1} << maps.size(),
                std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, 0)};
    const std::size_t n = maps.size();
    for (std::size_t i = 0; i < n; ++i) {
        const BinaryMap& m = *maps[i];
        if (m.width != w || m.height != h) throw InvalidArgument("compress_groups: map sizes differ");
        const auto weight = static_cast<std::uint16_t>(1u << (n - 1 - i));
        for (std::size_t p = 0; p < m.bits.size(); ++p)
            if (m.bits[p]) out.codes[p] = static_cast<std::uint16_t>(out.codes[p] | weight);
    }
    return out;
}

std::vector<CodeMap> compress_groups(const BinaryStack& stack, bool trans_layer) {
    const std::size_t l1 = stack.layer2.size();
    if (trans_layer && stack.layer1.size() != l1)
        throw InvalidArgument("compress_groups: group size does not equal L1");
    if (l1 == 0) throw InvalidArgument("compress_groups: empty stack");
    const std::size_t l2 = stack.layer2.front().size();
    for (const auto& row : stack.layer2)
        if (row.size() != l2) throw InvalidArgument("compress_groups: ragged second layer");

    std::vector<CodeMap> out;
    out.reserve(l2 + 1);
    std::vector<const BinaryMap*> group(l1);
    if (trans_layer) {
        for (std::size_t i = 0; i < l1; ++i) group[i] = &stack.layer1[i];
        out.push_back(pack_group(group));
    }
    for (std::size_t j = 0; j < l2; ++j) {
        for (std::size_t i = 0; i < l1; ++i) group[i] = &stack.layer2[i][j];
        out.push_back(pack_group(group));
    }
    return out;
}

std::vector<Block> partition_blocks(int map_width, int map_height, const EncoderConfig& e) {
    if (e.block_w < 1 || e.block_h < 1 || e.stride_x < 1 || e.stride_y < 1)
        throw InvalidArgument("partition_blocks: block sides and strides must be positive");
    if (e.block_w > map_width || e.block_h > map_height)
        throw InvalidArgument("partition_blocks: block larger than map");
    const int nx = (map_width - e.block_w) / e.stride_x + 1;
    const int ny = (map_height - e.block_h) / e.stride_y + 1;
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(nx) * ny);
    for (int b = 0; b < ny; ++b)
        for (int a = 0; a < nx; ++a)
            blocks.push_back({a * e.stride_x, b * e.stride_y, e.block_w, e.block_h});
    return blocks;
}

HistogramFeature feature_of(std::span<const CodeMap> code_maps, const EncoderConfig& encoder) {
    if (code_maps.empty()) throw InvalidArgument("feature_of: no code maps");
    const int w = code_maps.front().width;
    const int h = code_maps.front().height;
    for (const auto& m : code_maps)
        if (m.width != w || m.height != h) throw InvalidArgument("feature_of: code map sizes differ");

    const auto blocks = partition_blocks(w, h, encoder);
    const std::size_t bins = encoder.bins;
    HistogramFeature f;
    f.dim = code_maps.size() * blocks.size() * bins;

    std::vector<std::uint32_t> counts(bins, 0);
    std::vector<std::uint32_t> touched;
    touched.reserve(static_cast<std::size_t>(encoder.block_w) * encoder.block_h);
    std::size_t offset = 0;
    for (const auto& map : code_maps) {
        for (const auto& block : blocks) {
            touched.clear();
            for (int r = block.y; r < block.y + block.h; ++r) {
                for (int c = block.x; c < block.x + block.w; ++c) {
                    const std::uint32_t code = map.at(r, c);
                    if (code >= bins) throw InvalidArgument("feature_of: code exceeds bin count");
                    if (counts[code]++ == 0) touched.push_back(code);
                }
            }
            std::sort(touched.begin(), touched.end());
            for (std::uint32_t code : touched) {
                f.entries.push_back({static_cast<std::uint32_t>(offset + code), counts[code]});
                counts[code] = 0;
            }
            offset += bins;
        }
    }
    return f;
}

}  // namespace dtln
