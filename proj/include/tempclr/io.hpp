#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempclr/eval.hpp"
#include "tempclr/model.hpp"
#include "tempclr/seqcore.hpp"
#include "tempclr/synth.hpp"
#include "tempclr/train.hpp"

namespace tempclr::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int format_version = 1;
inline constexpr std::string_view binary_extension = ".tcpb";
inline constexpr std::array<char, 8> pair_magic{'T', 'C', 'L', 'R', 'P', 'A', 'I', 'R'};
inline constexpr std::array<char, 8> video_magic{'T', 'C', 'L', 'R', 'V', 'I', 'D', '0'};
inline constexpr std::array<char, 8> checkpoint_magic{'T', 'C', 'L', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t checkpoint_version = 1;

// Default data directory when --data is omitted.
inline std::optional<std::string> default_data_dir() {
    if (const char* env = std::getenv("TEMPCLR_DATA"); env && *env) return std::string(env);
    return std::nullopt;
}

// 9 significant digits: enough to be stable across a write/read/write cycle.
inline std::string format_float(double v) {
    if (!std::isfinite(v)) throw NumericalError("cannot serialize non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory '" + dir.string() + "'");
}

namespace detail {

inline json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
}

inline const json& field(const json& j, const char* name, const std::string& where) {
    if (!j.is_object() || !j.contains(name)) throw DataError(where + ": missing field '" + name + "'");
    return j.at(name);
}

template <typename T>
T get_as(const json& j, const char* name, const std::string& where) {
    const json& v = field(j, name, where);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw DataError(where + ": field '" + name + "' has the wrong type");
    }
}

inline std::size_t get_index(const json& j, const char* name, const std::string& where) {
    const json& v = field(j, name, where);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw DataError(where + ": field '" + name + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

inline std::vector<double> embedding_of(const json& unit, std::size_t dim, const std::string& where) {
    const json& e = field(unit, "embedding", where);
    if (!e.is_array()) throw DataError(where + ": field 'embedding' must be an array");
    if (e.size() != dim) {
        throw DataError(where + ": field 'embedding' has " + std::to_string(e.size()) + " values, dim is " +
                        std::to_string(dim));
    }
    std::vector<double> out;
    out.reserve(dim);
    for (const auto& x : e) {
        if (!x.is_number()) throw DataError(where + ": field 'embedding' holds a non-number");
        out.push_back(x.get<double>());
    }
    return out;
}

inline Matrix units_of(const json& list, const char* name, std::size_t dim, const std::string& where) {
    if (!list.is_array()) throw DataError(where + ": field '" + name + "' must be an array");
    Matrix m(0, dim);
    for (std::size_t k = 0; k < list.size(); ++k) {
        m.append_row(embedding_of(list[k], dim, where + ": " + name + "[" + std::to_string(k) + "]"));
    }
    return m;
}

inline void write_embedding(std::ostringstream& out, std::span<const double> row) {
    out << "\"embedding\": [";
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? ", " : "") << format_float(row[k]);
    out << "]";
}

inline std::string quoted(const std::string& s) { return json(s).dump(); }

// Little-endian fixed-width encoding.
class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) {
        for (int b = 0; b < 4; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
    }
    void f32(double v) {
        if (!std::isfinite(v)) throw NumericalError("cannot serialize non-finite value");
        u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    [[nodiscard]] const std::string& data() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string_view data, std::string where) : data_{data}, where_{std::move(where)} {}
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw DataError(where_ + ": truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
        pos_ += 4;
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void magic(const std::array<char, 8>& m) {
        need(m.size());
        if (std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0) throw DataError(where_ + ": bad magic");
        pos_ += m.size();
    }
    Matrix matrix(std::size_t rows, std::size_t cols) {
        need(rows * cols * 4);
        Matrix m(rows, cols);
        for (double& v : m.flat()) v = f32();
        return m;
    }
    [[nodiscard]] bool done() const { return pos_ == data_.size(); }
    [[nodiscard]] const std::string& where() const { return where_; }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
    std::string where_;
};

inline void finish_pair(SegmentedPair& p) {
    p.anchor.id = p.id + ":text";
    p.positive.id = p.id + ":video";
    p.background_mask = compute_background_mask(p.positive.size(), p.segments);
}

}  // namespace detail

inline bool is_binary_path(const fs::path& path) { return path.extension() == binary_extension; }

// ---- pairs -----------------------------------------------------------------

inline std::string pair_to_text(const SegmentedPair& p) {
    std::ostringstream out;
    out << "{\n  \"id\": " << detail::quoted(p.id) << ",\n  \"dim\": " << p.dim() << ",\n  \"captions\": [";
    for (std::size_t i = 0; i < p.anchor.size(); ++i) {
        out << (i ? "," : "") << "\n    {\"id\": " << detail::quoted("c" + std::to_string(i)) << ", ";
        detail::write_embedding(out, p.anchor.unit(i));
        out << "}";
    }
    out << "\n  ],\n  \"clips\": [";
    for (std::size_t j = 0; j < p.positive.size(); ++j) {
        out << (j ? "," : "") << "\n    {";
        detail::write_embedding(out, p.positive.unit(j));
        out << "}";
    }
    out << "\n  ],\n  \"segments\": [";
    for (std::size_t s = 0; s < p.segments.size(); ++s) {
        const auto& seg = p.segments[s];
        out << (s ? "," : "") << "\n    {\"caption_index\": " << seg.caption_index << ", \"start\": " << seg.start
            << ", \"end\": " << seg.end << "}";
    }
    out << "\n  ]\n}\n";
    return out.str();
}

// Parses and validates a pair record. Overlapping or unordered segments are
// rejected; use canonicalize_pair on raw data first.
inline SegmentedPair pair_from_text(const std::string& text, const std::string& where = "pair") {
    const json j = detail::parse_json(text, where);
    SegmentedPair p;
    p.id = detail::get_as<std::string>(j, "id", where);
    const std::size_t dim = detail::get_index(j, "dim", where);
    if (dim == 0) throw DataError(where + ": field 'dim' must be positive");
    p.anchor.units = detail::units_of(detail::field(j, "captions", where), "captions", dim, where);
    p.positive.units = detail::units_of(detail::field(j, "clips", where), "clips", dim, where);
    const json& segs = detail::field(j, "segments", where);
    if (!segs.is_array()) throw DataError(where + ": field 'segments' must be an array");
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const std::string w = where + ": segments[" + std::to_string(s) + "]";
        p.segments.push_back({detail::get_index(segs[s], "caption_index", w), detail::get_index(segs[s], "start", w),
                              detail::get_index(segs[s], "end", w)});
    }
    detail::finish_pair(p);
    validate_pair(p);
    return p;
}

inline std::string pair_to_binary(const SegmentedPair& p) {
    detail::ByteWriter w;
    w.bytes(pair_magic.data(), pair_magic.size());
    w.u32(format_version);
    w.str(p.id);
    w.u32(static_cast<std::uint32_t>(p.dim()));
    w.u32(static_cast<std::uint32_t>(p.anchor.size()));
    w.u32(static_cast<std::uint32_t>(p.positive.size()));
    w.u32(static_cast<std::uint32_t>(p.segments.size()));
    for (double v : p.anchor.units.flat()) w.f32(v);
    for (double v : p.positive.units.flat()) w.f32(v);
    for (const auto& s : p.segments) {
        w.u32(static_cast<std::uint32_t>(s.caption_index));
        w.u32(static_cast<std::uint32_t>(s.start));
        w.u32(static_cast<std::uint32_t>(s.end));
    }
    return w.data();
}

inline SegmentedPair pair_from_binary(std::string_view bytes, const std::string& where = "pair") {
    detail::ByteReader r(bytes, where);
    r.magic(pair_magic);
    if (r.u32() != format_version) throw DataError(where + ": unsupported format version");
    SegmentedPair p;
    p.id = r.str();
    const std::size_t dim = r.u32(), n_cap = r.u32(), n_clip = r.u32(), n_seg = r.u32();
    if (dim == 0) throw DataError(where + ": field 'dim' must be positive");
    p.anchor.units = r.matrix(n_cap, dim);
    p.positive.units = r.matrix(n_clip, dim);
    for (std::size_t s = 0; s < n_seg; ++s) {
        const std::size_t c = r.u32(), a = r.u32(), b = r.u32();
        p.segments.push_back({c, a, b});
    }
    if (!r.done()) throw DataError(where + ": trailing bytes");
    detail::finish_pair(p);
    validate_pair(p);
    return p;
}

inline void save_pair(const SegmentedPair& p, const fs::path& path) {
    write_file(path, is_binary_path(path) ? pair_to_binary(p) : pair_to_text(p));
}

inline SegmentedPair load_pair(const fs::path& path) {
    const std::string bytes = read_file(path);
    return is_binary_path(path) ? pair_from_binary(bytes, path.string()) : pair_from_text(bytes, path.string());
}

// ---- labeled videos --------------------------------------------------------

inline std::string video_to_text(const LabeledVideo& v) {
    std::ostringstream out;
    out << "{\n  \"id\": " << detail::quoted(v.id) << ",\n  \"label\": " << detail::quoted(v.label)
        << ",\n  \"dim\": " << v.frames.dim() << ",\n  \"frames\": [";
    for (std::size_t j = 0; j < v.frames.size(); ++j) {
        out << (j ? "," : "") << "\n    {";
        detail::write_embedding(out, v.frames.unit(j));
        out << "}";
    }
    out << "\n  ]\n}\n";
    return out.str();
}

inline LabeledVideo video_from_text(const std::string& text, const std::string& where = "video") {
    const json j = detail::parse_json(text, where);
    LabeledVideo v;
    v.id = detail::get_as<std::string>(j, "id", where);
    v.label = detail::get_as<std::string>(j, "label", where);
    const std::size_t dim = detail::get_index(j, "dim", where);
    if (dim == 0) throw DataError(where + ": field 'dim' must be positive");
    v.frames = {v.id, detail::units_of(detail::field(j, "frames", where), "frames", dim, where)};
    v.frames.validate();
    return v;
}

inline std::string video_to_binary(const LabeledVideo& v) {
    detail::ByteWriter w;
    w.bytes(video_magic.data(), video_magic.size());
    w.u32(format_version);
    w.str(v.id);
    w.str(v.label);
    w.u32(static_cast<std::uint32_t>(v.frames.dim()));
    w.u32(static_cast<std::uint32_t>(v.frames.size()));
    for (double x : v.frames.units.flat()) w.f32(x);
    return w.data();
}

inline LabeledVideo video_from_binary(std::string_view bytes, const std::string& where = "video") {
    detail::ByteReader r(bytes, where);
    r.magic(video_magic);
    if (r.u32() != format_version) throw DataError(where + ": unsupported format version");
    LabeledVideo v;
    v.id = r.str();
    v.label = r.str();
    const std::size_t dim = r.u32(), n = r.u32();
    if (dim == 0) throw DataError(where + ": field 'dim' must be positive");
    v.frames = {v.id, r.matrix(n, dim)};
    if (!r.done()) throw DataError(where + ": trailing bytes");
    v.frames.validate();
    return v;
}

inline void save_video(const LabeledVideo& v, const fs::path& path) {
    write_file(path, is_binary_path(path) ? video_to_binary(v) : video_to_text(v));
}

inline LabeledVideo load_video(const fs::path& path) {
    const std::string bytes = read_file(path);
    return is_binary_path(path) ? video_from_binary(bytes, path.string()) : video_from_text(bytes, path.string());
}

// ---- datasets --------------------------------------------------------------

enum class DatasetKind { pairs, videos };

inline std::string_view to_string(DatasetKind k) { return k == DatasetKind::pairs ? "pairs" : "videos"; }

struct ManifestEntry {
    std::string id;
    std::string path;  // relative to the manifest directory
    std::string split;
};

struct DatasetManifest {
    int version = format_version;
    std::size_t dim = 0;
    DatasetKind kind = DatasetKind::pairs;
    std::vector<ManifestEntry> entries;
};

inline std::string manifest_to_text(const DatasetManifest& m) {
    json j;
    j["format_version"] = m.version;
    j["dim"] = m.dim;
    j["kind"] = std::string(to_string(m.kind));
    j["entries"] = json::array();
    for (const auto& e : m.entries) j["entries"].push_back({{"id", e.id}, {"path", e.path}, {"split", e.split}});
    return j.dump(2) + "\n";
}

inline DatasetManifest manifest_from_text(const std::string& text, const std::string& where = "manifest") {
    const json j = detail::parse_json(text, where);
    DatasetManifest m;
    m.version = detail::get_as<int>(j, "format_version", where);
    if (m.version != format_version) throw DataError(where + ": unsupported format_version");
    m.dim = detail::get_index(j, "dim", where);
    const auto kind = detail::get_as<std::string>(j, "kind", where);
    if (kind == "pairs") m.kind = DatasetKind::pairs;
    else if (kind == "videos") m.kind = DatasetKind::videos;
    else throw DataError(where + ": field 'kind' must be 'pairs' or 'videos'");
    const json& entries = detail::field(j, "entries", where);
    if (!entries.is_array()) throw DataError(where + ": field 'entries' must be an array");
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const std::string w = where + ": entries[" + std::to_string(k) + "]";
        m.entries.push_back({detail::get_as<std::string>(entries[k], "id", w),
                             detail::get_as<std::string>(entries[k], "path", w),
                             detail::get_as<std::string>(entries[k], "split", w)});
    }
    return m;
}

struct Dataset {
    DatasetManifest manifest;
    std::vector<SegmentedPair> pairs;
    std::vector<LabeledVideo> videos;
    std::vector<std::string> splits;  // split tag per loaded item
};

inline constexpr std::string_view manifest_name = "manifest.json";

// Loads the entries whose split is in `splits` (all when empty). Dimensions
// and ids are checked against the manifest.
inline Dataset load_dataset(const fs::path& dir, const std::vector<std::string>& splits = {}) {
    const fs::path mpath = dir / manifest_name;
    Dataset d;
    d.manifest = manifest_from_text(read_file(mpath), mpath.string());
    for (const auto& e : d.manifest.entries) {
        if (!splits.empty() && std::find(splits.begin(), splits.end(), e.split) == splits.end()) continue;
        const fs::path p = dir / e.path;
        if (!fs::exists(p)) throw DataError(mpath.string() + ": entry '" + e.id + "' path does not exist");
        std::size_t dim = 0;
        std::string id;
        if (d.manifest.kind == DatasetKind::pairs) {
            d.pairs.push_back(load_pair(p));
            dim = d.pairs.back().dim();
            id = d.pairs.back().id;
        } else {
            d.videos.push_back(load_video(p));
            dim = d.videos.back().frames.dim();
            id = d.videos.back().id;
        }
        if (dim != d.manifest.dim) {
            throw DataError(p.string() + ": dim " + std::to_string(dim) + " != manifest dim " +
                            std::to_string(d.manifest.dim));
        }
        if (id != e.id) throw DataError(p.string() + ": id '" + id + "' != manifest id '" + e.id + "'");
        d.splits.push_back(e.split);
    }
    return d;
}

// Writes one file per item plus the manifest. `ext` is ".json" or ".tcpb".
inline DatasetManifest save_pairs(const fs::path& dir, const std::vector<std::pair<const SegmentedPair*, std::string>>& items,
                                  std::string_view ext = ".json") {
    ensure_dir(dir / "pairs");
    DatasetManifest m;
    m.kind = DatasetKind::pairs;
    for (const auto& [p, split] : items) {
        if (m.dim == 0) m.dim = p->dim();
        const std::string rel = "pairs/" + p->id + std::string(ext);
        save_pair(*p, dir / rel);
        m.entries.push_back({p->id, rel, split});
    }
    write_file(dir / manifest_name, manifest_to_text(m));
    return m;
}

inline DatasetManifest save_videos(const fs::path& dir, const std::vector<std::pair<const LabeledVideo*, std::string>>& items,
                                   std::string_view ext = ".json") {
    ensure_dir(dir / "videos");
    DatasetManifest m;
    m.kind = DatasetKind::videos;
    for (const auto& [v, split] : items) {
        if (m.dim == 0) m.dim = v->frames.dim();
        const std::string rel = "videos/" + v->id + std::string(ext);
        save_video(*v, dir / rel);
        m.entries.push_back({v->id, rel, split});
    }
    write_file(dir / manifest_name, manifest_to_text(m));
    return m;
}

// ---- checkpoints -----------------------------------------------------------

// magic, u32 version, u32 metadata length, metadata JSON, then every
// parameter block (per head and layer: weight row-major, bias) as LE float32.
inline std::string checkpoint_bytes(const ProjectionModel& model) {
    const auto& s = model.spec();
    json meta = {{"input_dim", s.input_dim},
                 {"hidden_dim", s.hidden_dim},
                 {"output_dim", s.output_dim},
                 {"activation", std::string(to_string(s.activation))},
                 {"twin", s.twin},
                 {"seed", s.seed},
                 {"parameter_count", model.parameter_count()}};
    detail::ByteWriter w;
    w.bytes(checkpoint_magic.data(), checkpoint_magic.size());
    w.u32(checkpoint_version);
    w.str(meta.dump());
    for (double v : model.parameters()) w.f32(v);
    return w.data();
}

inline ProjectionModel model_from_checkpoint(std::string_view bytes, const std::string& where = "checkpoint") {
    detail::ByteReader r(bytes, where);
    r.magic(checkpoint_magic);
    if (r.u32() != checkpoint_version) throw DataError(where + ": unsupported checkpoint version");
    const json meta = detail::parse_json(r.str(), where + " metadata");
    ModelSpec spec;
    spec.input_dim = detail::get_index(meta, "input_dim", where);
    spec.hidden_dim = detail::get_index(meta, "hidden_dim", where);
    spec.output_dim = detail::get_index(meta, "output_dim", where);
    try {
        spec.activation = parse_activation(detail::get_as<std::string>(meta, "activation", where));
    } catch (const std::invalid_argument&) {
        throw DataError(where + ": field 'activation' is unknown");
    }
    spec.twin = detail::get_as<bool>(meta, "twin", where);
    spec.seed = detail::get_as<std::uint64_t>(meta, "seed", where);
    if (spec.input_dim == 0 || spec.output_dim == 0) throw DataError(where + ": zero model dimension");
    ProjectionModel model(spec);
    if (detail::get_index(meta, "parameter_count", where) != model.parameter_count()) {
        throw DataError(where + ": field 'parameter_count' does not match the dims");
    }
    for (double& v : model.parameters()) v = r.f32();
    if (!r.done()) throw DataError(where + ": trailing bytes");
    return model;
}

inline void save_checkpoint(const ProjectionModel& model, const fs::path& path) {
    write_file(path, checkpoint_bytes(model));
}

inline ProjectionModel load_checkpoint(const fs::path& path) {
    return model_from_checkpoint(read_file(path), path.string());
}

// ---- reports ---------------------------------------------------------------

inline constexpr std::string_view csv_header = "task,measure,k,value";

// Recall rows carry K; auxiliary rows carry the scalar's name in the k column.
inline std::string report_csv(const std::vector<EvalReport>& reports) {
    std::string out(csv_header);
    out += "\n";
    for (const auto& r : reports) {
        for (const auto& [k, v] : r.recall) out += r.task + "," + r.measure + "," + std::to_string(k) + "," + format_float(v) + "\n";
        for (const auto& [name, v] : r.auxiliary) out += r.task + "," + r.measure + "," + name + "," + format_float(v) + "\n";
    }
    return out;
}

inline std::string report_table(const std::vector<EvalReport>& reports) {
    std::vector<std::array<std::string, 4>> rows{{"task", "measure", "k", "value"}};
    for (const auto& r : reports) {
        for (const auto& [k, v] : r.recall) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", v);
            rows.push_back({r.task, r.measure, "R@" + std::to_string(k), buf});
        }
        for (const auto& [name, v] : r.auxiliary) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", v);
            rows.push_back({r.task, r.measure, name, buf});
        }
    }
    std::array<std::size_t, 4> width{};
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            out << (c ? "  " : "") << (c == 3 ? std::right : std::left) << std::setw(static_cast<int>(width[c]))
                << rows[r][c];
        }
        out << "\n";
        if (r == 0) out << std::string(width[0] + width[1] + width[2] + width[3] + 6, '-') << "\n";
    }
    return out.str();
}

inline std::string per_query_jsonl(const EvalReport& r) {
    std::string out;
    for (const auto& q : r.per_query) {
        out += "{\"query\": " + detail::quoted(q.query_id) + ", \"target\": " + detail::quoted(q.target_id) +
               ", \"rank\": " + std::to_string(q.rank) + ", \"scores\": [";
        for (std::size_t k = 0; k < q.scores.size(); ++k) out += (k ? ", " : "") + format_float(q.scores[k]);
        out += "]}\n";
    }
    return out;
}

inline json train_report_json(const TrainReport& rep, const TrainConfig& cfg) {
    json j;
    j["seed"] = rep.seed;
    j["mode"] = std::string(to_string(cfg.mode));
    j["strategy"] = std::string(to_string(cfg.neg_strategy));
    j["negatives"] = cfg.neg_count;
    j["tau"] = cfg.loss.tau;
    j["w_unit"] = cfg.loss.w_unit;
    j["w_seq"] = cfg.loss.w_seq;
    j["lr"] = cfg.lr;
    j["epochs"] = cfg.epochs;
    j["batch_pairs"] = cfg.batch_pairs;
    j["measure"] = std::string(to_string(cfg.loss.measure));
    j["loss_curve"] = rep.loss_curve;
    j["initial_loss"] = rep.loss_curve.empty() ? 0.0 : rep.loss_curve.front();
    j["final_loss"] = rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back();
    j["skipped_pairs"] = rep.skipped_pairs;
    j["snapshots"] = json::array();
    for (const auto& s : rep.snapshots) j["snapshots"].push_back({{"epoch", s.epoch}, {"metrics", s.metrics}});
    return j;
}

// ---- synthetic corpus configs ----------------------------------------------

namespace detail {

template <typename T>
void maybe(const json& j, const char* name, T& out) {
    if (!j.contains(name)) return;
    try {
        out = j.at(name).get<T>();
    } catch (const json::exception&) {
        throw DataError(std::string("synth config: field '") + name + "' has the wrong type");
    }
}

}  // namespace detail

inline SynthConfig synth_config_from_json(const json& j) {
    SynthConfig c;
    detail::maybe(j, "n_tasks", c.n_tasks);
    detail::maybe(j, "videos_per_task", c.videos_per_task);
    detail::maybe(j, "segments_per_video", c.segments_per_video);
    detail::maybe(j, "clips_min", c.clips_min);
    detail::maybe(j, "clips_max", c.clips_max);
    detail::maybe(j, "dim", c.dim);
    detail::maybe(j, "content_dim", c.content_dim);
    detail::maybe(j, "caption_noise", c.caption_noise);
    detail::maybe(j, "clip_noise", c.clip_noise);
    detail::maybe(j, "confuser_prob", c.confuser_prob);
    detail::maybe(j, "background_min", c.background_min);
    detail::maybe(j, "background_max", c.background_max);
    detail::maybe(j, "progress_drift", c.progress_drift);
    detail::maybe(j, "task_share", c.task_share);
    detail::maybe(j, "style_scale", c.style_scale);
    detail::maybe(j, "nuisance_scale", c.nuisance_scale);
    detail::maybe(j, "shuffle_steps", c.shuffle_steps);
    detail::maybe(j, "train_fraction", c.train_fraction);
    detail::maybe(j, "seed", c.seed);
    return c;
}

inline FewShotSynthConfig fewshot_config_from_json(const json& j) {
    FewShotSynthConfig c;
    detail::maybe(j, "n_classes", c.n_classes);
    detail::maybe(j, "base_classes", c.base_classes);
    detail::maybe(j, "videos_per_class", c.videos_per_class);
    detail::maybe(j, "n_prototypes", c.n_prototypes);
    detail::maybe(j, "frames_min", c.frames_min);
    detail::maybe(j, "frames_max", c.frames_max);
    detail::maybe(j, "dim", c.dim);
    detail::maybe(j, "content_dim", c.content_dim);
    detail::maybe(j, "frame_noise", c.frame_noise);
    detail::maybe(j, "progress_drift", c.progress_drift);
    detail::maybe(j, "task_share", c.task_share);
    detail::maybe(j, "style_scale", c.style_scale);
    detail::maybe(j, "nuisance_scale", c.nuisance_scale);
    detail::maybe(j, "class_orders", c.class_orders);
    detail::maybe(j, "seed", c.seed);
    return c;
}

inline json truth_to_json(const std::vector<PairTruth>& truth) {
    json out = json::array();
    for (const auto& t : truth) {
        json clips = json::array();
        for (const auto& c : t.clips) clips.push_back({{"segment", c.segment}, {"source_step", c.source_step}, {"confuser", c.confuser}});
        out.push_back({{"id", t.id}, {"task", t.task}, {"step_order", t.step_order}, {"split", t.train ? "train" : "test"},
                       {"clips", clips}});
    }
    return out;
}

}  // namespace tempclr::io
