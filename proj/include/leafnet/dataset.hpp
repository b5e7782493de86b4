#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "leafnet/common.hpp"
#include "leafnet/image.hpp"
#include "leafnet/imageio.hpp"

// Dataset indexing, bounding-box preprocessing, and train/test splitting.
//
// Directory layouts:
//   flat:   <root>/<class_name>/<image files>
//   fixed:  <root>/train/<class_name>/... and <root>/test/<class_name>/...
// The preprocessed cache mirrors the layout with 350x350 PPM images plus a
// JSON manifest recording source path, checksum, and parameters.

namespace leafnet {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

struct DatasetIndex {
    std::string name;
    fs::path root;
    std::vector<std::string> classes;                 // sorted, unique
    std::vector<std::vector<std::string>> files;      // per class, sorted paths relative to root
    bool has_fixed_split = false;
    std::vector<std::vector<std::string>> fixed_train, fixed_test;  // per class, when fixed

    int num_classes() const { return int(classes.size()); }

    int64_t total_images() const {
        int64_t n = 0;
        for (auto& f : files) n += int64_t(f.size());
        return n;
    }
};

namespace detail {

inline std::vector<std::string> list_images(const fs::path& dir, const fs::path& rel_base) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_supported_image(e.path()))
            out.push_back(fs::relative(e.path(), rel_base).generic_string());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::string> list_class_dirs(const fs::path& root) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

inline DatasetIndex load_dataset_index(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
    DatasetIndex idx;
    idx.root = root;
    idx.name = root.filename().string();

    const bool fixed = fs::is_directory(root / "train") && fs::is_directory(root / "test");
    if (fixed) {
        idx.has_fixed_split = true;
        std::vector<std::string> names = detail::list_class_dirs(root / "train");
        for (const auto& c : detail::list_class_dirs(root / "test"))
            if (std::find(names.begin(), names.end(), c) == names.end()) names.push_back(c);
        std::sort(names.begin(), names.end());
        for (const auto& c : names) {
            std::vector<std::string> tr, te;
            if (fs::is_directory(root / "train" / c)) tr = detail::list_images(root / "train" / c, root);
            if (fs::is_directory(root / "test" / c)) te = detail::list_images(root / "test" / c, root);
            std::vector<std::string> all = tr;
            all.insert(all.end(), te.begin(), te.end());
            std::sort(all.begin(), all.end());
            if (all.empty()) throw ConfigError("class " + c + " has no images");
            idx.classes.push_back(c);
            idx.files.push_back(std::move(all));
            idx.fixed_train.push_back(std::move(tr));
            idx.fixed_test.push_back(std::move(te));
        }
    } else {
        for (const auto& c : detail::list_class_dirs(root)) {
            std::vector<std::string> imgs = detail::list_images(root / c, root);
            if (imgs.empty()) throw ConfigError("class " + c + " has no images");
            idx.classes.push_back(c);
            idx.files.push_back(std::move(imgs));
        }
    }
    if (idx.classes.empty()) throw ConfigError("dataset " + root.string() + " contains no class directories");
    return idx;
}

// ---------------------------------------------------------------------------
// Bounding box + preprocessing
// ---------------------------------------------------------------------------

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const Rect&) const = default;
};

// Tightest rectangle containing every pixel with any channel below the
// threshold; throws NoForegroundError when the image is all background.
inline Rect compute_bounding_box(const ImageU8& img, int background_threshold = 240) {
    int min_x = img.width, min_y = img.height, max_x = -1, max_y = -1;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const bool fg = img.at(y, x, 0) < background_threshold || img.at(y, x, 1) < background_threshold ||
                            img.at(y, x, 2) < background_threshold;
            if (fg) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    if (max_x < 0) throw NoForegroundError("image contains no pixel below background threshold " +
                                           std::to_string(background_threshold));
    return Rect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

struct PreprocessParams {
    int content_size = 344;       // bounding-box contents are resized to this square
    int margin = 3;               // white pixels added on each side
    int background_threshold = 240;

    int canvas_size() const { return content_size + 2 * margin; }

    void validate() const {
        if (content_size <= 0 || margin < 0) throw ConfigError("preprocess sizes must be positive");
        if (background_threshold < 1 || background_threshold > 255)
            throw ConfigError("background threshold must be in [1,255]");
    }
};

inline ImageU8 extract_rect(const ImageU8& img, const Rect& r) {
    ImageU8 out(r.h, r.w);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(r.y + y, r.x + x, c);
    return out;
}

// bounding box -> square resize (aspect ratio not preserved) -> white margin
inline ImageU8 preprocess_image(const ImageU8& raw, const PreprocessParams& params = {}) {
    params.validate();
    const Rect box = compute_bounding_box(raw, params.background_threshold);
    const ImageU8 content = resize_bilinear(extract_rect(raw, box), params.content_size, params.content_size);
    ImageU8 canvas(params.canvas_size(), params.canvas_size());  // white
    for (int y = 0; y < params.content_size; ++y)
        for (int x = 0; x < params.content_size; ++x)
            for (int c = 0; c < 3; ++c) canvas.at(y + params.margin, x + params.margin, c) = content.at(y, x, c);
    return canvas;
}

// ---------------------------------------------------------------------------
// Split specification
// ---------------------------------------------------------------------------

enum class SplitKind { CountCount, CountAll, FracFrac, Fixed };

struct SplitSpec {
    SplitKind kind = SplitKind::CountCount;
    int64_t test_count = 0;
    int64_t train_count = 0;
    double test_fraction = 0.0;
    double train_fraction = 0.0;
    std::string text;  // original notation

    static SplitSpec count_count(int64_t test, int64_t train) {
        SplitSpec s;
        s.kind = SplitKind::CountCount;
        s.test_count = test;
        s.train_count = train;
        s.text = std::to_string(test) + "x" + std::to_string(train);
        return s;
    }
    static SplitSpec count_all(int64_t count) {
        SplitSpec s;
        s.kind = SplitKind::CountAll;
        s.test_count = count;
        s.text = std::to_string(count) + "xALL";
        return s;
    }
    static SplitSpec frac_frac(double test, double train) {
        SplitSpec s;
        s.kind = SplitKind::FracFrac;
        s.test_fraction = test;
        s.train_fraction = train;
        s.text = "frac";
        return s;
    }
    static SplitSpec fixed() {
        SplitSpec s;
        s.kind = SplitKind::Fixed;
        s.text = "FIXED";
        return s;
    }
};

namespace detail {

struct SplitToken {
    enum Kind { Count, Fraction, All } kind;
    int64_t count = 0;
    double fraction = 0.0;
};

inline SplitToken parse_split_token(const std::string& tok, size_t pos) {
    if (tok.empty()) throw ParseError("empty split term at position " + std::to_string(pos));
    std::string lower = tok;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (lower == "all") return {SplitToken::All, 0, 0.0};

    const size_t slash = tok.find('/');
    auto digits = [&](const std::string& s, size_t at) -> int64_t {
        if (s.empty()) throw ParseError("missing number at position " + std::to_string(at));
        for (size_t i = 0; i < s.size(); ++i)
            if (!std::isdigit((unsigned char)s[i]))
                throw ParseError("unexpected character '" + std::string(1, s[i]) + "' at position " +
                                 std::to_string(at + i));
        return std::stoll(s);
    };
    if (slash == std::string::npos) {
        const int64_t v = digits(tok, pos);
        if (v <= 0) throw ParseError("count must be positive at position " + std::to_string(pos));
        return {SplitToken::Count, v, 0.0};
    }
    const int64_t num = digits(tok.substr(0, slash), pos);
    const int64_t den = digits(tok.substr(slash + 1), pos + slash + 1);
    if (num <= 0 || den <= 0 || num >= den)
        throw ParseError("fraction must lie in (0,1) at position " + std::to_string(pos));
    return {SplitToken::Fraction, 0, double(num) / double(den)};
}

}  // namespace detail

// Accepts "AxB", "AxALL", "p/qxp/q" and "FIXED"; case-insensitive, the
// separator may be 'x' or the multiplication sign.
inline SplitSpec parse_split_spec(const std::string& text) {
    std::string t;
    t.reserve(text.size());
    for (char c : text)
        if (!std::isspace((unsigned char)c)) t.push_back(c);
    if (t.empty()) throw ParseError("empty split spec at position 0");

    std::string lower = t;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (lower == "fixed") {
        SplitSpec s = SplitSpec::fixed();
        s.text = text;
        return s;
    }

    // locate the separator: ASCII 'x'/'X' or UTF-8 multiplication sign; a
    // leading 'x' cannot be a separator
    size_t sep = std::string::npos, sep_len = 0;
    for (size_t i = 1; i < t.size(); ++i) {
        if (t[i] == 'x' || t[i] == 'X') {
            sep = i;
            sep_len = 1;
            break;
        }
        if (i + 1 < t.size() && (unsigned char)t[i] == 0xC3 && (unsigned char)t[i + 1] == 0x97) {
            sep = i;
            sep_len = 2;
            break;
        }
    }
    if (sep == std::string::npos) throw ParseError("missing 'x' separator in '" + text + "' at position 0");

    const auto left = detail::parse_split_token(t.substr(0, sep), 0);
    const auto right = detail::parse_split_token(t.substr(sep + sep_len), sep + sep_len);

    SplitSpec s;
    s.text = text;
    if (left.kind == detail::SplitToken::Count && right.kind == detail::SplitToken::Count) {
        s.kind = SplitKind::CountCount;
        s.test_count = left.count;
        s.train_count = right.count;
    } else if (left.kind == detail::SplitToken::Count && right.kind == detail::SplitToken::All) {
        s.kind = SplitKind::CountAll;
        s.test_count = left.count;
    } else if (left.kind == detail::SplitToken::Fraction && right.kind == detail::SplitToken::Fraction) {
        s.kind = SplitKind::FracFrac;
        s.test_fraction = left.fraction;
        s.train_fraction = right.fraction;
    } else {
        throw ParseError("unsupported split combination '" + text + "' at position 0");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Split construction
// ---------------------------------------------------------------------------

struct SplitItem {
    int class_id = 0;
    std::string path;
    bool operator==(const SplitItem&) const = default;
};

struct Split {
    uint64_t seed = 0;
    std::vector<std::string> classes;
    std::vector<SplitItem> train, test;

    int num_classes() const { return int(classes.size()); }

    std::vector<std::vector<int>> train_indices_by_class() const {
        std::vector<std::vector<int>> by_class(classes.size());
        for (int i = 0; i < int(train.size()); ++i) by_class[size_t(train[size_t(i)].class_id)].push_back(i);
        return by_class;
    }
};

struct MakeSplitOptions {
    // "NxALL" default: N per class to the test set, remainder to training.
    // The literal flag flips it: N to training, remainder to testing.
    bool count_all_to_train = false;
};

inline Split make_split(const DatasetIndex& index, const SplitSpec& spec, uint64_t seed,
                        const MakeSplitOptions& opts = {}) {
    Split split;
    split.seed = seed;
    split.classes = index.classes;

    if (spec.kind == SplitKind::Fixed) {
        if (!index.has_fixed_split)
            throw ConfigError("split spec FIXED requires a dataset with train/ and test/ directories");
        for (int c = 0; c < index.num_classes(); ++c) {
            for (const auto& p : index.fixed_train[size_t(c)]) split.train.push_back({c, p});
            for (const auto& p : index.fixed_test[size_t(c)]) split.test.push_back({c, p});
        }
        return split;
    }

    Rng rng = Rng::stream(seed, "split");
    for (int c = 0; c < index.num_classes(); ++c) {
        const auto& pool_paths = index.files[size_t(c)];
        const int64_t n = int64_t(pool_paths.size());

        int64_t t = 0, r = 0;  // test count, train count; r < 0 means "all remaining"
        switch (spec.kind) {
            case SplitKind::CountCount:
                t = spec.test_count;
                r = spec.train_count;
                break;
            case SplitKind::CountAll:
                if (opts.count_all_to_train) {
                    // literal reading: the stated count goes to training
                    t = n - spec.test_count;
                    r = spec.test_count;
                } else {
                    t = spec.test_count;
                    r = n - spec.test_count;
                }
                if (n <= spec.test_count)
                    throw CapacityError("class " + index.classes[size_t(c)] + " has " + std::to_string(n) +
                                        " images, needs more than " + std::to_string(spec.test_count));
                break;
            case SplitKind::FracFrac:
                t = int64_t(std::floor(spec.test_fraction * double(n)));
                r = int64_t(std::floor(spec.train_fraction * double(n)));
                if (t < 1 || r < 1)
                    throw CapacityError("class " + index.classes[size_t(c)] + " has too few images (" +
                                        std::to_string(n) + ") for fractional split " + spec.text);
                break;
            default: break;
        }
        if (t + r > n)
            throw CapacityError("class " + index.classes[size_t(c)] + " has " + std::to_string(n) +
                                " images, split " + spec.text + " needs " + std::to_string(t + r));

        // draw test instances first, then train instances from the remainder,
        // both without replacement (partial Fisher-Yates over the index pool)
        std::vector<int64_t> pool(size_t(n), 0);
        for (int64_t i = 0; i < n; ++i) pool[size_t(i)] = i;
        for (int64_t i = 0; i < t + r; ++i) {
            const int64_t j = rng.uniform_int(i, n - 1);
            std::swap(pool[size_t(i)], pool[size_t(j)]);
        }
        for (int64_t i = 0; i < t; ++i) split.test.push_back({c, pool_paths[size_t(pool[size_t(i)])]});
        for (int64_t i = t; i < t + r; ++i) split.train.push_back({c, pool_paths[size_t(pool[size_t(i)])]});
    }
    return split;
}

// ---------------------------------------------------------------------------
// Preprocessed cache with manifest
// ---------------------------------------------------------------------------

inline uint64_t file_checksum(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    uint64_t h = kFnvOffset;
    char buf[65536];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) h = fnv1a64(buf, size_t(f.gcount()), h);
    return h;
}

struct CacheEntry {
    std::string source;   // relative to the dataset root
    std::string output;   // relative to the cache root
    std::string class_name;
    uint64_t checksum = 0;
};

struct CacheManifest {
    int version = 1;
    PreprocessParams params;
    std::string dataset_root;
    std::vector<CacheEntry> entries;
    std::vector<std::string> no_foreground;  // skipped: nothing below the threshold
    std::vector<std::string> unreadable;     // skipped: decode failures
};

inline void save_cache_manifest(const CacheManifest& m, const fs::path& path) {
    nlohmann::json j;
    j["version"] = m.version;
    j["params"] = {{"content_size", m.params.content_size},
                   {"margin", m.params.margin},
                   {"background_threshold", m.params.background_threshold}};
    j["dataset_root"] = m.dataset_root;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : m.entries)
        j["entries"].push_back(
            {{"source", e.source}, {"output", e.output}, {"class", e.class_name}, {"checksum", e.checksum}});
    j["no_foreground"] = m.no_foreground;
    j["unreadable"] = m.unreadable;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest " + path.string());
    f << j.dump(2) << "\n";
}

inline CacheManifest load_cache_manifest(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read manifest " + path.string());
    nlohmann::json j;
    f >> j;
    CacheManifest m;
    m.version = j.at("version").get<int>();
    m.params.content_size = j.at("params").at("content_size").get<int>();
    m.params.margin = j.at("params").at("margin").get<int>();
    m.params.background_threshold = j.at("params").at("background_threshold").get<int>();
    m.dataset_root = j.at("dataset_root").get<std::string>();
    for (const auto& e : j.at("entries"))
        m.entries.push_back({e.at("source").get<std::string>(), e.at("output").get<std::string>(),
                             e.at("class").get<std::string>(), e.at("checksum").get<uint64_t>()});
    for (const auto& s : j.at("no_foreground")) m.no_foreground.push_back(s.get<std::string>());
    for (const auto& s : j.at("unreadable")) m.unreadable.push_back(s.get<std::string>());
    return m;
}

struct PreprocessStats {
    int64_t processed = 0;
    int64_t skipped = 0;  // unchanged since the previous run (checksum match)
    std::map<std::string, int64_t> per_class;
};

// Builds or refreshes the 350x350 cache.  Unchanged sources (same checksum,
// output present) are not rewritten.
inline PreprocessStats build_preprocess_cache(const DatasetIndex& index, const fs::path& cache_root,
                                              const PreprocessParams& params, CacheManifest& manifest) {
    params.validate();
    manifest.version = 1;
    manifest.params = params;
    manifest.dataset_root = index.root.generic_string();

    std::map<std::string, const CacheEntry*> previous;
    for (const auto& e : manifest.entries) previous[e.source] = &e;

    PreprocessStats stats;
    std::vector<CacheEntry> fresh;
    std::vector<std::string> no_fg, unreadable;

    for (int c = 0; c < index.num_classes(); ++c) {
        const std::string& cls = index.classes[size_t(c)];
        for (const auto& rel : index.files[size_t(c)]) {
            const fs::path src = index.root / rel;
            uint64_t sum = 0;
            ImageU8 raw;
            try {
                sum = file_checksum(src);
            } catch (const IoError&) {
                unreadable.push_back(rel);
                continue;
            }

            fs::path out_rel = fs::path(rel).replace_extension(".ppm");
            const fs::path out_abs = cache_root / out_rel;

            auto it = previous.find(rel);
            if (it != previous.end() && it->second->checksum == sum && fs::exists(out_abs)) {
                fresh.push_back(*it->second);
                stats.skipped++;
                stats.per_class[cls]++;
                continue;
            }

            try {
                raw = load_image_any(src);
            } catch (const IoError&) {
                unreadable.push_back(rel);
                continue;
            }
            ImageU8 canvas;
            try {
                canvas = preprocess_image(raw, params);
            } catch (const NoForegroundError&) {
                no_fg.push_back(rel);
                continue;
            }
            fs::create_directories(out_abs.parent_path());
            write_ppm(out_abs, canvas);
            fresh.push_back({rel, out_rel.generic_string(), cls, sum});
            stats.processed++;
            stats.per_class[cls]++;
        }
    }
    manifest.entries = std::move(fresh);
    manifest.no_foreground = std::move(no_fg);
    manifest.unreadable = std::move(unreadable);
    return stats;
}

}  // namespace leafnet
