#include "dtln/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace dtln {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw InvalidArgument("config key '" + std::string(key) + "': invalid number '" +
                              std::string(value) + "'");
    return out;
}

bool parse_switch(std::string_view key, std::string_view value) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw InvalidArgument("config key '" + std::string(key) + "': expected on|off, got '" +
                          std::string(value) + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

const char* on_off(bool b) { return b ? "on" : "off"; }

}  // namespace

EncoderConfig Config::encoder() const {
    EncoderConfig e;
    e.block_w = block_w;
    e.block_h = block_h;
    e.stride_x = stride_x;
    e.stride_y = stride_y;
    e.bins = (l1 >= 1 && l1 <= 16) ? (std::uint32_t{1} << l1) : 0;
    e.trans_layer = trans_layer;
    e.lcn_enabled = lcn;
    return e;
}

std::vector<std::string> validate_config(const Config& c, int image_width, int image_height) {
    std::vector<std::string> errors;
    auto fail = [&](std::string msg) { errors.push_back(std::move(msg)); };

    if (c.patch_k1 < 1 || c.patch_k2 < 1) fail("patch sides must be positive");
    if (c.patch_k1 % 2 == 0 || c.patch_k2 % 2 == 0) fail("patch side must be odd");
    if (c.l1 < 1 || c.l1 > 16) fail("l1 must be in 1..16");
    if (c.l2 < 1 || c.l2 > 16) fail("l2 must be in 1..16");
    if (c.learner == Learner::Pca) {
        const int dim = c.patch_k1 * c.patch_k2;
        if (c.l1 > dim) fail("l1 must not exceed patch_k1*patch_k2 for PCA");
        if (c.l2 > dim) fail("l2 must not exceed patch_k1*patch_k2 for PCA");
    }
    if (c.bins && c.l1 >= 1 && c.l1 <= 16 && *c.bins != (std::uint32_t{1} << c.l1))
        fail("bins must equal 2^L1");
    if (!(c.lcn_c > 0.0)) fail("lcn_c must be positive");
    if (!(c.whiten_epsilon >= 0.0)) fail("whiten_epsilon must be non-negative");
    if (!(c.dae_corruption >= 0.0 && c.dae_corruption < 1.0)) fail("dae_corruption must be in [0,1)");
    if (c.dae_epochs < 1) fail("dae_epochs must be at least 1");
    if (!(c.dae_lr >= 0.0)) fail("dae_lr must be non-negative");
    if (!(c.dae_tradeoff_c > 0.0)) fail("dae_tradeoff_c must be positive");
    if (c.dae_minibatch < 1) fail("dae_minibatch must be at least 1");
    if (c.patches_per_layer < 2) fail("patches_per_layer must be at least 2");
    if (c.block_w < 1 || c.block_h < 1) fail("block sides must be positive");
    if (c.stride_x < 1 || c.stride_y < 1) fail("strides must be at least 1");
    if (image_width > 0 && c.block_w > image_width) fail("block_w exceeds image width");
    if (image_height > 0 && c.block_h > image_height) fail("block_h exceeds image height");
    if (!(c.svm_c > 0.0)) fail("svm_c must be positive");
    if (c.wpca_dim < 1) fail("wpca_dim must be at least 1");
    return errors;
}

Config parse_config(std::string_view text) {
    Config c;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (key == "patch_k1") c.patch_k1 = parse_number<int>(key, value);
        else if (key == "patch_k2") c.patch_k2 = parse_number<int>(key, value);
        else if (key == "l1") c.l1 = parse_number<int>(key, value);
        else if (key == "l2") c.l2 = parse_number<int>(key, value);
        else if (key == "lcn") c.lcn = parse_switch(key, value);
        else if (key == "lcn_c") c.lcn_c = parse_number<double>(key, value);
        else if (key == "whiten_epsilon") c.whiten_epsilon = parse_number<double>(key, value);
        else if (key == "learner") {
            if (value == "pca") c.learner = Learner::Pca;
            else if (value == "dae") c.learner = Learner::Dae;
            else throw InvalidArgument("config key 'learner': expected pca|dae");
        }
        else if (key == "dae_corruption") c.dae_corruption = parse_number<double>(key, value);
        else if (key == "dae_epochs") c.dae_epochs = parse_number<int>(key, value);
        else if (key == "dae_lr") c.dae_lr = parse_number<double>(key, value);
        else if (key == "dae_tradeoff_c") c.dae_tradeoff_c = parse_number<double>(key, value);
        else if (key == "dae_minibatch") c.dae_minibatch = parse_number<int>(key, value);
        else if (key == "patches_per_layer") c.patches_per_layer = parse_number<std::size_t>(key, value);
        else if (key == "block_w") c.block_w = parse_number<int>(key, value);
        else if (key == "block_h") c.block_h = parse_number<int>(key, value);
        else if (key == "stride_x") c.stride_x = parse_number<int>(key, value);
        else if (key == "stride_y") c.stride_y = parse_number<int>(key, value);
        else if (key == "bins") c.bins = parse_number<std::uint32_t>(key, value);
        else if (key == "trans_layer") c.trans_layer = parse_switch(key, value);
        else if (key == "preprocess_at_extraction") c.preprocess_at_extraction = parse_switch(key, value);
        else if (key == "classifier") {
            if (value == "svm") c.classifier = ClassifierKind::Svm;
            else if (value == "wpca_cosine") c.classifier = ClassifierKind::WpcaCosine;
            else throw InvalidArgument("config key 'classifier': expected svm|wpca_cosine");
        }
        else if (key == "svm_c") c.svm_c = parse_number<double>(key, value);
        else if (key == "wpca_dim") c.wpca_dim = parse_number<int>(key, value);
        else if (key == "wpca_sqrt") c.wpca_sqrt = parse_switch(key, value);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
        else throw InvalidArgument("unknown config key '" + std::string(key) + "'");
    }
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": no such file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_text(const Config& c) {
    std::ostringstream out;
    out << "patch_k1=" << c.patch_k1 << '\n'
        << "patch_k2=" << c.patch_k2 << '\n'
        << "l1=" << c.l1 << '\n'
        << "l2=" << c.l2 << '\n'
        << "lcn=" << on_off(c.lcn) << '\n'
        << "lcn_c=" << fmt_double(c.lcn_c) << '\n'
        << "whiten_epsilon=" << fmt_double(c.whiten_epsilon) << '\n'
        << "learner=" << (c.learner == Learner::Pca ? "pca" : "dae") << '\n'
        << "dae_corruption=" << fmt_double(c.dae_corruption) << '\n'
        << "dae_epochs=" << c.dae_epochs << '\n'
        << "dae_lr=" << fmt_double(c.dae_lr) << '\n'
        << "dae_tradeoff_c=" << fmt_double(c.dae_tradeoff_c) << '\n'
        << "dae_minibatch=" << c.dae_minibatch << '\n'
        << "patches_per_layer=" << c.patches_per_layer << '\n'
        << "block_w=" << c.block_w << '\n'
        << "block_h=" << c.block_h << '\n'
        << "stride_x=" << c.stride_x << '\n'
        << "stride_y=" << c.stride_y << '\n';
    if (c.bins) out << "bins=" << *c.bins << '\n';
    out << "trans_layer=" << on_off(c.trans_layer) << '\n'
        << "preprocess_at_extraction=" << on_off(c.preprocess_at_extraction) << '\n'
        << "classifier=" << (c.classifier == ClassifierKind::Svm ? "svm" : "wpca_cosine") << '\n'
        << "svm_c=" << fmt_double(c.svm_c) << '\n'
        << "wpca_dim=" << c.wpca_dim << '\n'
        << "wpca_sqrt=" << on_off(c.wpca_sqrt) << '\n'
        << "seed=" << c.seed << '\n';
    return out.str();
}

}  // namespace dtln
