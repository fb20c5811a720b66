#include "dtln/data_io.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dtln {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kModelMagic[] = "DTLNMDL1";
constexpr std::size_t kAmatPixels = 784;

std::string read_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError(path + ": no such file");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path + ": write failed");
}

std::uint32_t be32(std::string_view s, std::size_t at) {
    return (std::uint32_t{static_cast<unsigned char>(s[at])} << 24) |
           (std::uint32_t{static_cast<unsigned char>(s[at + 1])} << 16) |
           (std::uint32_t{static_cast<unsigned char>(s[at + 2])} << 8) |
           std::uint32_t{static_cast<unsigned char>(s[at + 3])};
}

void put_be32(std::string& s, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

// Little-endian section payload builder.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { put(v, 4); }
    void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void f64s(std::span<const double> vs) {
        for (double v : vs) f64(v);
    }
    void bytes(std::string_view s) { buf_.append(s); }
    std::string& str() { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string_view data, std::string section) : data_(data), section_(std::move(section)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    void f64s(std::span<double> out) {
        for (double& v : out) v = f64();
    }
    std::size_t remaining() const { return data_.size() - pos_; }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    // Guards allocation sizes read from the file.
    void expect_at_least(std::uint64_t n) {
        if (n > remaining()) truncated();
    }
    void finish() const {
        if (pos_ != data_.size())
            throw ModelFormatError("section " + section_ + ": unexpected trailing bytes");
    }

private:
    [[noreturn]] void truncated() const { throw ModelFormatError("section " + section_ + ": truncated"); }
    void need(std::size_t n) const {
        if (n > remaining()) truncated();
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= std::uint64_t{static_cast<unsigned char>(data_[pos_ + i])} << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::string_view data_;
    std::string section_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view s) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large payloads in pieces.
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(s.size() - pos, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(s.data() + pos), n);
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

struct SectionSpec {
    const char* tag;
    const char* name;
};

constexpr std::array<SectionSpec, 7> kSections{{
    {"CONF", "config"},
    {"BNK1", "bank1"},
    {"WHT1", "whiten1"},
    {"BNK2", "bank2"},
    {"WHT2", "whiten2"},
    {"ENCD", "encoder"},
    {"CLSF", "classifier"},
}};

void write_bank(ByteWriter& w, const FilterBank& b) {
    w.u8(static_cast<std::uint8_t>(b.kind));
    w.i32(b.shape.k1);
    w.i32(b.shape.k2);
    w.u64(b.weights.rows());
    w.u64(b.weights.cols());
    w.f64s(b.weights.data());
    w.u64(b.biases.size());
    w.f64s(b.biases);
}

FilterBank read_bank(ByteReader& r) {
    FilterBank b;
    const auto kind = r.u8();
    if (kind > 1) throw ModelFormatError("unknown filter bank kind");
    b.kind = static_cast<LayerKind>(kind);
    b.shape.k1 = r.i32();
    b.shape.k2 = r.i32();
    const auto rows = r.u64();
    const auto cols = r.u64();
    r.expect_at_least(rows * cols * 8);
    b.weights = Matrix(rows, cols);
    r.f64s(b.weights.data());
    const auto nb = r.u64();
    r.expect_at_least(nb * 8);
    b.biases.resize(nb);
    r.f64s(b.biases);
    return b;
}

void write_whiten(ByteWriter& w, const WhiteningTransform& t) {
    w.u64(t.dim);
    w.f64(t.epsilon);
    w.u64(t.matrix.rows());
    w.u64(t.matrix.cols());
    w.f64s(t.matrix.data());
}

WhiteningTransform read_whiten(ByteReader& r) {
    WhiteningTransform t;
    t.dim = r.u64();
    t.epsilon = r.f64();
    const auto rows = r.u64();
    const auto cols = r.u64();
    r.expect_at_least(rows * cols * 8);
    t.matrix = Matrix(rows, cols);
    r.f64s(t.matrix.data());
    return t;
}

void write_matrix(ByteWriter& w, const Matrix& m) {
    w.u64(m.rows());
    w.u64(m.cols());
    w.f64s(m.data());
}

Matrix read_matrix(ByteReader& r) {
    const auto rows = r.u64();
    const auto cols = r.u64();
    r.expect_at_least(rows * cols * 8);
    Matrix m(rows, cols);
    r.f64s(m.data());
    return m;
}

void write_classifier(ByteWriter& w, const Classifier& c) {
    if (const auto* svm = std::get_if<LinearSvmModel>(&c)) {
        w.u8(0);
        w.f64(svm->cost_c);
        w.u64(svm->classes.size());
        for (int label : svm->classes) w.i32(label);
        write_matrix(w, svm->weights);
        w.f64s(svm->bias);
        return;
    }
    const auto& wc = std::get<WpcaCosineModel>(c);
    w.u8(1);
    w.u8(wc.sqrt_features ? 1 : 0);
    w.u64(wc.wpca.mean.size());
    w.f64s(wc.wpca.mean);
    write_matrix(w, wc.wpca.projection);
    write_matrix(w, wc.train_projected);
    w.u64(wc.labels.size());
    for (int label : wc.labels) w.i32(label);
}

Classifier read_classifier(ByteReader& r) {
    const auto kind = r.u8();
    if (kind == 0) {
        LinearSvmModel svm;
        svm.cost_c = r.f64();
        const auto nc = r.u64();
        r.expect_at_least(nc * 4);
        svm.classes.resize(nc);
        for (int& label : svm.classes) label = r.i32();
        svm.weights = read_matrix(r);
        if (svm.weights.rows() != nc) throw ModelFormatError("classifier: weight rows do not match classes");
        svm.bias.resize(nc);
        r.f64s(svm.bias);
        return svm;
    }
    if (kind != 1) throw ModelFormatError("unknown classifier kind");
    WpcaCosineModel wc;
    wc.sqrt_features = r.u8() != 0;
    const auto d = r.u64();
    r.expect_at_least(d * 8);
    wc.wpca.mean.resize(d);
    r.f64s(wc.wpca.mean);
    wc.wpca.projection = read_matrix(r);
    wc.train_projected = read_matrix(r);
    const auto n = r.u64();
    r.expect_at_least(n * 4);
    wc.labels.resize(n);
    for (int& label : wc.labels) label = r.i32();
    return wc;
}

}  // namespace

// ---------------------------------------------------------------------------
// IDX

LabeledImages read_idx(const std::string& images_path, const std::string& labels_path) {
    const std::string img = read_file(images_path);
    const std::string lab = read_file(labels_path);
    if (img.size() < 16 || be32(img, 0) != kIdxImagesMagic)
        throw IoError(images_path + ": bad magic (expected 0x00000803)");
    if (lab.size() < 8 || be32(lab, 0) != kIdxLabelsMagic)
        throw IoError(labels_path + ": bad magic (expected 0x00000801)");

    const std::uint32_t count = be32(img, 4);
    const std::uint32_t rows = be32(img, 8);
    const std::uint32_t cols = be32(img, 12);
    const std::uint32_t label_count = be32(lab, 4);
    if (rows == 0 || cols == 0) throw IoError(images_path + ": zero image size");
    const std::uint64_t pixels = std::uint64_t{rows} * cols;
    if (img.size() < 16 + pixels * count) throw IoError(images_path + ": truncated file");
    if (lab.size() < 8 + std::uint64_t{label_count}) throw IoError(labels_path + ": truncated file");
    if (label_count != count)
        throw IoError("count mismatch: " + std::to_string(count) + " images vs " +
                      std::to_string(label_count) + " labels");

    LabeledImages out;
    out.images.reserve(count);
    out.labels.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<double> px(pixels);
        const auto* src = reinterpret_cast<const unsigned char*>(img.data() + 16 + i * pixels);
        for (std::uint64_t k = 0; k < pixels; ++k) px[k] = src[k] / 255.0;
        out.images.emplace_back(static_cast<int>(cols), static_cast<int>(rows), std::move(px));
        out.labels.push_back(static_cast<unsigned char>(lab[8 + i]));
    }
    return out;
}

void write_idx(const LabeledImages& data, const std::string& images_path,
               const std::string& labels_path) {
    if (data.images.empty()) throw InvalidArgument("write_idx: no images");
    std::string img;
    put_be32(img, kIdxImagesMagic);
    put_be32(img, static_cast<std::uint32_t>(data.images.size()));
    put_be32(img, static_cast<std::uint32_t>(data.images.front().height));
    put_be32(img, static_cast<std::uint32_t>(data.images.front().width));
    for (const auto& im : data.images)
        for (double v : im.pixels)
            img.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    std::string lab;
    put_be32(lab, kIdxLabelsMagic);
    put_be32(lab, static_cast<std::uint32_t>(data.labels.size()));
    for (int l : data.labels) lab.push_back(static_cast<char>(static_cast<unsigned char>(l)));
    write_file(images_path, img);
    write_file(labels_path, lab);
}

// ---------------------------------------------------------------------------
// amat

LabeledImages read_amat(std::istream& in, const std::string& name) {
    LabeledImages out;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> fields;
    fields.reserve(kAmatPixels + 1);
    while (std::getline(in, line)) {
        ++line_no;
        fields.clear();
        const char* p = line.data();
        const char* end = p + line.size();
        while (true) {
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p == end) break;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || (next < end && *next != ' ' && *next != '\t' && *next != '\r'))
                throw IoError(name + ":" + std::to_string(line_no) + ": non-numeric field");
            fields.push_back(v);
            p = next;
        }
        if (fields.empty()) continue;
        if (fields.size() != kAmatPixels + 1)
            throw IoError(name + ":" + std::to_string(line_no) + ": expected 785 fields, got " +
                          std::to_string(fields.size()));
        const double label = fields.back();
        if (!std::isfinite(label) || label != std::floor(label))
            throw IoError(name + ":" + std::to_string(line_no) + ": label is not an integer");
        fields.pop_back();
        for (double v : fields)
            if (!std::isfinite(v)) throw IoError(name + ":" + std::to_string(line_no) + ": non-finite pixel");
        out.images.emplace_back(28, 28, fields);
        out.labels.push_back(static_cast<int>(label));
    }
    return out;
}

LabeledImages read_amat(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError(path + ": no such file");
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    return read_amat(in, path);
}

void write_amat(const LabeledImages& data, std::ostream& out) {
    char buf[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& img = data.images[i];
        if (img.size() != kAmatPixels) throw InvalidArgument("write_amat: images must be 28x28");
        for (double v : img.pixels) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out.write(buf, ptr - buf);
            out.put(' ');
        }
        out << data.labels[i] << '\n';
    }
}

LabeledImages read_dataset(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError(path + ": no such file");
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".amat") == 0) return read_amat(path);
    const auto pos = path.find("images-idx3");
    if (pos == std::string::npos)
        throw IoError(path + ": unrecognized dataset (expected *.amat or *images-idx3*)");
    std::string labels = path;
    labels.replace(pos, 11, "labels-idx1");
    return read_idx(path, labels);
}

// ---------------------------------------------------------------------------
// Model container

std::string serialize_model(const TrainedModel& model) {
    std::array<ByteWriter, kSections.size()> payload;
    payload[0].bytes(to_text(model.config));
    write_bank(payload[1], model.bank1);
    write_whiten(payload[2], model.whiten1);
    write_bank(payload[3], model.bank2);
    write_whiten(payload[4], model.whiten2);
    {
        auto& w = payload[5];
        const auto& e = model.encoder;
        w.i32(e.block_w);
        w.i32(e.block_h);
        w.i32(e.stride_x);
        w.i32(e.stride_y);
        w.u32(e.bins);
        w.u8(e.trans_layer ? 1 : 0);
        w.u8(e.lcn_enabled ? 1 : 0);
    }
    write_classifier(payload[6], model.classifier);

    ByteWriter out;
    out.bytes(std::string_view(kModelMagic, 8));
    for (std::size_t s = 0; s < kSections.size(); ++s) {
        out.bytes(std::string_view(kSections[s].tag, 4));
        const std::string& body = payload[s].str();
        out.u64(body.size());
        out.bytes(body);
        out.u32(crc32_of(body));
    }
    return std::move(out.str());
}

TrainedModel deserialize_model(const std::string& bytes) {
    if (bytes.size() < 8) throw ModelFormatError("model file truncated (no magic)");
    const std::string_view magic(bytes.data(), 8);
    if (magic != std::string_view(kModelMagic, 8)) {
        if (magic.substr(0, 7) == "DTLNMDL")
            throw ModelFormatError("unsupported model version '" + std::string(magic) + "'");
        throw ModelFormatError("bad magic: not a DTLN model file");
    }

    ByteReader file(std::string_view(bytes).substr(8), "header");
    std::array<std::string_view, kSections.size()> payload;
    for (std::size_t s = 0; s < kSections.size(); ++s) {
        const std::string label = std::string(kSections[s].tag) + " (" + kSections[s].name + ")";
        if (file.remaining() < 12) throw ModelFormatError("model file truncated before section " + label);
        const auto tag = file.take(4);
        if (tag != kSections[s].tag)
            throw ModelFormatError("expected section " + label + ", found '" + std::string(tag) + "'");
        const auto length = file.u64();
        if (length > file.remaining() || file.remaining() - length < 4)
            throw ModelFormatError("section " + label + ": truncated");
        payload[s] = file.take(static_cast<std::size_t>(length));
        const auto crc = file.u32();
        if (crc != crc32_of(payload[s])) throw ModelFormatError("checksum mismatch in section " + label);
    }
    if (file.remaining() != 0) throw ModelFormatError("unexpected bytes after last section");

    TrainedModel model;
    model.config = parse_config(payload[0]);
    {
        ByteReader r(payload[1], "BNK1");
        model.bank1 = read_bank(r);
        r.finish();
    }
    {
        ByteReader r(payload[2], "WHT1");
        model.whiten1 = read_whiten(r);
        r.finish();
    }
    {
        ByteReader r(payload[3], "BNK2");
        model.bank2 = read_bank(r);
        r.finish();
    }
    {
        ByteReader r(payload[4], "WHT2");
        model.whiten2 = read_whiten(r);
        r.finish();
    }
    {
        ByteReader r(payload[5], "ENCD");
        auto& e = model.encoder;
        e.block_w = r.i32();
        e.block_h = r.i32();
        e.stride_x = r.i32();
        e.stride_y = r.i32();
        e.bins = r.u32();
        e.trans_layer = r.u8() != 0;
        e.lcn_enabled = r.u8() != 0;
        r.finish();
    }
    {
        ByteReader r(payload[6], "CLSF");
        model.classifier = read_classifier(r);
        r.finish();
    }
    try {
        model.validate();
    } catch (const InvalidArgument& e) {
        throw ModelFormatError(std::string("inconsistent model: ") + e.what());
    }
    return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
    write_file(path, serialize_model(model));
}

TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

// ---------------------------------------------------------------------------
// PGM

namespace {

std::vector<std::uint8_t> pgm_frame(int width, int height, const std::vector<std::uint8_t>& pixels) {
    const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace

std::vector<std::uint8_t> pgm_bytes(const FeatureMap& map) {
    if (map.pixels.empty()) throw InvalidArgument("dump_map_pgm: empty map");
    const auto [lo_it, hi_it] = std::minmax_element(map.pixels.begin(), map.pixels.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<std::uint8_t> px(map.pixels.size(), 128);
    if (hi > lo)
        for (std::size_t i = 0; i < px.size(); ++i)
            px[i] = static_cast<std::uint8_t>(std::lround((map.pixels[i] - lo) / (hi - lo) * 255.0));
    return pgm_frame(map.width, map.height, px);
}

std::vector<std::uint8_t> pgm_bytes(const CodeMap& map) {
    if (map.codes.empty()) throw InvalidArgument("dump_map_pgm: empty map");
    const double scale = map.bins > 1 ? 255.0 / static_cast<double>(map.bins - 1) : 0.0;
    std::vector<std::uint8_t> px(map.codes.size());
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = static_cast<std::uint8_t>(std::lround(map.codes[i] * scale));
    return pgm_frame(map.width, map.height, px);
}

void dump_map_pgm(const FeatureMap& map, const std::string& path) { write_bytes(path, pgm_bytes(map)); }
void dump_map_pgm(const CodeMap& map, const std::string& path) { write_bytes(path, pgm_bytes(map)); }

// ---------------------------------------------------------------------------
// Sparse feature text

void write_sparse_feature(std::ostream& out, int label, const HistogramFeature& feature) {
    out << label;
    for (const auto& e : feature.entries) out << ' ' << (e.index + 1) << ':' << e.count;
    out << '\n';
}

std::vector<LabeledFeature> read_sparse_features(std::istream& in, std::size_t dim) {
    std::vector<LabeledFeature> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream tokens(line);
        std::string tok;
        if (!(tokens >> tok)) continue;
        LabeledFeature lf;
        {
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), lf.label);
            if (ec != std::errc{} || p != tok.data() + tok.size())
                throw IoError("sparse features line " + std::to_string(line_no) + ": bad label");
        }
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            std::uint64_t idx = 0;
            std::uint32_t count = 0;
            const char* b = tok.data();
            const char* e = tok.data() + tok.size();
            if (colon == std::string::npos) throw IoError("sparse features line " + std::to_string(line_no) + ": expected idx:count");
            auto r1 = std::from_chars(b, b + colon, idx);
            auto r2 = std::from_chars(b + colon + 1, e, count);
            if (r1.ec != std::errc{} || r1.ptr != b + colon || r2.ec != std::errc{} || r2.ptr != e || idx == 0)
                throw IoError("sparse features line " + std::to_string(line_no) + ": bad entry '" + tok + "'");
            const auto zero_based = static_cast<std::uint32_t>(idx - 1);
            if (!lf.feature.entries.empty() && zero_based <= lf.feature.entries.back().index)
                throw IoError("sparse features line " + std::to_string(line_no) + ": indices not ascending");
            lf.feature.entries.push_back({zero_based, count});
            max_index = std::max<std::size_t>(max_index, idx);
        }
        out.push_back(std::move(lf));
    }
    const std::size_t final_dim = dim ? dim : max_index;
    for (auto& lf : out) {
        if (!lf.feature.entries.empty() && lf.feature.entries.back().index >= final_dim)
            throw IoError("sparse features: index exceeds dimension");
        lf.feature.dim = final_dim;
    }
    return out;
}

}  // namespace dtln
