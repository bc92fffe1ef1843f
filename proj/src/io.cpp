#include "ntrack/io.hpp"

#include "ntrack/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace ntrack::io {

namespace {

using nlohmann::json;

class Writer {
public:
    template <class T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
        out_.append(reinterpret_cast<const char*>(b), sizeof(T));
    }
    void bytes(std::string_view s) { out_.append(s); }
    void label(const std::string& s) {
        if (s.size() > 0xffff) fail(ErrorCode::FormatError, "label longer than 65535 bytes");
        put(static_cast<std::uint16_t>(s.size()));
        bytes(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& b, std::string what) : b_(b), what_(std::move(what)) {}
    template <class T>
    T get() {
        need(sizeof(T));
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, b_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string label() { return bytes(get<std::uint16_t>()); }
    void need(std::size_t n) const {
        if (pos_ + n > b_.size()) fail(ErrorCode::FormatError, what_ + ": truncated file");
    }
    bool done() const { return pos_ == b_.size(); }
    const std::string& what() const { return what_; }

private:
    const std::string& b_;
    std::string what_;
    std::size_t pos_ = 0;
};

constexpr std::uint32_t kVersion = 1;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json schedule_json(const std::optional<SwitchSchedule>& s) {
    if (!s) return nullptr;
    return json{{"t1", s->t1}, {"t2", s->t2}};
}

std::string trial_stem(const TrialRecord& r) {
    std::string s = r.trial_id;
    for (char& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    }
    // scalp and grid records of one trial share a trial id
    if (r.electrodes == ElectrodeSet::grid) s += ".grid";
    return s;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        f.flush();
        if (!f) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string encode_ctts(const TimeSeries& ts) {
    ts.validate();
    Writer w;
    w.bytes("CTTS");
    w.put(kVersion);
    w.put(ts.rate);
    w.put(static_cast<std::uint32_t>(ts.channels()));
    w.put(static_cast<std::uint64_t>(ts.samples()));
    for (const auto& l : ts.labels) w.label(l);
    for (std::size_t c = 0; c < ts.channels(); ++c) {
        for (const double v : ts.channel(c)) w.put(static_cast<float>(v));
    }
    return w.take();
}

TimeSeries decode_ctts(const std::string& bytes, const std::string& what) {
    Reader r(bytes, what);
    if (r.bytes(4) != "CTTS") fail(ErrorCode::FormatError, what + ": not a CTTS file");
    if (const auto v = r.get<std::uint32_t>(); v != kVersion) fail(ErrorCode::FormatError, what + ": unsupported version " + std::to_string(v));
    const double rate = r.get<double>();
    const auto channels = r.get<std::uint32_t>();
    const auto samples = r.get<std::uint64_t>();
    std::vector<std::string> labels;
    for (std::uint32_t c = 0; c < channels; ++c) labels.push_back(r.label());
    r.need(static_cast<std::size_t>(channels) * samples * 4);
    Matrix data(channels, static_cast<Eigen::Index>(samples));
    for (std::uint32_t c = 0; c < channels; ++c) {
        for (std::uint64_t t = 0; t < samples; ++t) data(c, static_cast<Eigen::Index>(t)) = r.get<float>();
    }
    if (!r.done()) fail(ErrorCode::FormatError, what + ": trailing bytes");
    TimeSeries ts(std::move(data), rate, std::move(labels));
    ts.validate();
    return ts;
}

void write_ctts(const fs::path& path, const TimeSeries& ts) { write_atomic(path, encode_ctts(ts)); }
TimeSeries read_ctts(const fs::path& path) { return decode_ctts(read_file(path), path.string()); }

void write_feature(const fs::path& path, const FeatureSeries& f) {
    TimeSeries ts = f.as_series();
    ts.labels = {to_string(f.kind) + ":" + f.source_id};
    write_ctts(path, ts);
}

FeatureSeries read_feature(const fs::path& path) {
    const auto ts = read_ctts(path);
    if (ts.channels() != 1) fail(ErrorCode::FormatError, path.string() + ": a feature file holds one channel");
    const auto& label = ts.labels[0];
    const auto colon = label.find(':');
    if (colon == std::string::npos) fail(ErrorCode::FormatError, path.string() + ": feature label must be kind:source");
    return FeatureSeries::from_series(ts, feature_kind_from_string(label.substr(0, colon)), label.substr(colon + 1));
}

TimeSeries read_csv(const fs::path& path, double rate) {
    std::istringstream in(read_file(path));
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream ss(s);
        while (std::getline(ss, cur, ',')) {
            while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
            while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
            out.push_back(cur);
        }
        return out;
    };
    if (!std::getline(in, line)) fail(ErrorCode::FormatError, path.string() + ": empty CSV");
    const auto labels = split(line);
    std::vector<std::vector<double>> cols(labels.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (f.size() != labels.size()) {
            fail(ErrorCode::FormatError, path.string() + ":" + std::to_string(row) + ": expected " + std::to_string(labels.size()) + " fields");
        }
        for (std::size_t c = 0; c < f.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(f[c].c_str(), &end);
            if (end == f[c].c_str() || *end != '\0') fail(ErrorCode::FormatError, path.string() + ":" + std::to_string(row) + ": bad number '" + f[c] + "'");
            cols[c].push_back(v);
        }
    }
    const auto n = static_cast<Eigen::Index>(cols.empty() ? 0 : cols[0].size());
    Matrix data(static_cast<Eigen::Index>(labels.size()), n);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (Eigen::Index t = 0; t < n; ++t) data(static_cast<Eigen::Index>(c), t) = cols[c][static_cast<std::size_t>(t)];
    }
    TimeSeries ts(std::move(data), rate, labels);
    ts.validate();
    return ts;
}

TimeSeries read_wav(const fs::path& path) {
    const std::string b = read_file(path);
    const std::string what = path.string();
    Reader r(b, what);
    if (r.bytes(4) != "RIFF") fail(ErrorCode::FormatError, what + ": not a RIFF file");
    (void)r.get<std::uint32_t>();
    if (r.bytes(4) != "WAVE") fail(ErrorCode::FormatError, what + ": not a WAVE file");
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::string data;
    bool have_fmt = false, have_data = false;
    while (!r.done() && !have_data) {
        const std::string id = r.bytes(4);
        const auto size = r.get<std::uint32_t>();
        std::string body = r.bytes(size);
        if (size % 2 && !r.done()) r.bytes(1);
        if (id == "fmt ") {
            Reader f(body, what);
            format = f.get<std::uint16_t>();
            channels = f.get<std::uint16_t>();
            rate = f.get<std::uint32_t>();
            (void)f.get<std::uint32_t>();
            (void)f.get<std::uint16_t>();
            bits = f.get<std::uint16_t>();
            if (format == 0xFFFE) {
                (void)f.get<std::uint16_t>();
                (void)f.get<std::uint16_t>();
                (void)f.get<std::uint32_t>();
                format = f.get<std::uint16_t>();
            }
            have_fmt = true;
        } else if (id == "data") {
            data = std::move(body);
            have_data = true;
        }
    }
    if (!have_fmt || !have_data) fail(ErrorCode::FormatError, what + ": missing fmt or data chunk");
    if (channels == 0 || rate == 0) fail(ErrorCode::FormatError, what + ": bad fmt chunk");
    const bool pcm = format == 1 && (bits == 16 || bits == 24 || bits == 32);
    const bool flt = format == 3 && bits == 32;
    if (!pcm && !flt) fail(ErrorCode::FormatError, what + ": unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits));
    const std::size_t width = bits / 8;
    const std::size_t frames = data.size() / (width * channels);
    Matrix m(channels, static_cast<Eigen::Index>(frames));
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < channels; ++c, p += width) {
            double v = 0.0;
            if (flt) {
                std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
                float f;
                std::memcpy(&f, &u, 4);
                v = f;
            } else if (bits == 16) {
                v = static_cast<std::int16_t>(p[0] | (p[1] << 8)) / 32768.0;
            } else if (bits == 24) {
                std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
                if (s & 0x800000) s -= 0x1000000;
                v = s / 8388608.0;
            } else {
                const std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
                v = static_cast<std::int32_t>(u) / 2147483648.0;
            }
            m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = v;
        }
    }
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < channels; ++c) labels.push_back("ch" + std::to_string(c + 1));
    TimeSeries ts(std::move(m), rate, std::move(labels));
    ts.validate();
    return ts;
}

void write_wav16(const fs::path& path, const TimeSeries& ts) {
    ts.validate();
    const auto ch = static_cast<std::uint16_t>(ts.channels());
    const auto rate = static_cast<std::uint32_t>(std::lround(ts.rate));
    const auto bytes = static_cast<std::uint32_t>(ts.samples() * ch * 2);
    Writer w;
    w.bytes("RIFF");
    w.put<std::uint32_t>(36 + bytes);
    w.bytes("WAVEfmt ");
    w.put<std::uint32_t>(16);
    w.put<std::uint16_t>(1);
    w.put(ch);
    w.put(rate);
    w.put<std::uint32_t>(rate * ch * 2);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(ch * 2));
    w.put<std::uint16_t>(16);
    w.bytes("data");
    w.put(bytes);
    for (std::size_t t = 0; t < ts.samples(); ++t) {
        for (std::size_t c = 0; c < ch; ++c) {
            const double v = std::clamp(ts.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)), -1.0, 32767.0 / 32768.0);
            w.put(static_cast<std::int16_t>(std::lround(v * 32768.0)));
        }
    }
    write_atomic(path, w.take());
}

std::string encode_ctrf(const TRFKernel& k) {
    k.validate();
    Writer w;
    w.bytes("CTRF");
    w.put(kVersion);
    w.put(k.grid.rate);
    w.put(k.grid.t_min);
    w.put(k.grid.t_max);
    w.put(static_cast<std::uint8_t>(k.direction == Direction::forward ? 0 : 1));
    w.put(k.basis.width);
    w.put(static_cast<std::uint32_t>(k.h.rows()));
    w.put(static_cast<std::uint32_t>(k.h.cols()));
    w.put(static_cast<std::uint32_t>(k.weights.cols()));
    for (const auto& l : k.labels) w.label(l);
    for (Eigen::Index c = 0; c < k.h.rows(); ++c) {
        for (Eigen::Index j = 0; j < k.h.cols(); ++j) w.put(static_cast<float>(k.h(c, j)));
    }
    for (Eigen::Index c = 0; c < k.weights.rows(); ++c) {
        for (Eigen::Index j = 0; j < k.weights.cols(); ++j) w.put(static_cast<float>(k.weights(c, j)));
    }
    return w.take();
}

TRFKernel decode_ctrf(const std::string& bytes, const std::string& what) {
    Reader r(bytes, what);
    if (r.bytes(4) != "CTRF") fail(ErrorCode::FormatError, what + ": not a CTRF file");
    if (const auto v = r.get<std::uint32_t>(); v != kVersion) fail(ErrorCode::FormatError, what + ": unsupported version " + std::to_string(v));
    const double rate = r.get<double>(), t_min = r.get<double>(), t_max = r.get<double>();
    const auto dir = r.get<std::uint8_t>() == 0 ? Direction::forward : Direction::backward;
    const double width = r.get<double>();
    const auto channels = r.get<std::uint32_t>(), lags = r.get<std::uint32_t>(), nbasis = r.get<std::uint32_t>();
    std::vector<std::string> labels;
    for (std::uint32_t c = 0; c < channels; ++c) labels.push_back(r.label());
    const LagGrid grid(t_min, t_max, rate);
    if (grid.size() != lags) fail(ErrorCode::FormatError, what + ": lag count does not match the grid");
    const BasisSet basis = width > 0.0 ? make_basis(grid, width) : identity_basis(grid);
    if (basis.size() != nbasis) fail(ErrorCode::FormatError, what + ": basis size does not match");
    r.need(static_cast<std::size_t>(channels) * lags * 4);
    for (std::size_t i = 0; i < static_cast<std::size_t>(channels) * lags; ++i) (void)r.get<float>();
    Matrix wts(channels, nbasis);
    for (std::uint32_t c = 0; c < channels; ++c) {
        for (std::uint32_t j = 0; j < nbasis; ++j) wts(c, j) = r.get<float>();
    }
    if (!r.done()) fail(ErrorCode::FormatError, what + ": trailing bytes");
    return expand(wts, basis, grid, dir, labels);
}

void write_ctrf(const fs::path& path, const TRFKernel& k) { write_atomic(path, encode_ctrf(k)); }
TRFKernel read_ctrf(const fs::path& path) { return decode_ctrf(read_file(path), path.string()); }

std::vector<TrialRecord> Bundle::records() const {
    std::vector<TrialRecord> out;
    for (const auto& t : trials) out.push_back(t.record);
    return out;
}

void write_bundle(const fs::path& dir, const Bundle& bundle) {
    fs::create_directories(dir);
    json trials = json::array();
    std::vector<std::string> subjects;
    for (const auto& bt : bundle.trials) {
        const auto& r = bt.record;
        r.validate();
        const std::string stem = trial_stem(r);
        write_ctts(dir / (stem + ".eeg.ctts"), r.eeg);
        write_feature(dir / (stem + ".attended.ctts"), r.attended);
        write_feature(dir / (stem + ".ignored.ctts"), r.ignored);
        if (std::find(subjects.begin(), subjects.end(), r.subject_id) == subjects.end()) subjects.push_back(r.subject_id);
        trials.push_back({{"subject", r.subject_id},
                          {"trial", r.trial_id},
                          {"condition", to_string(r.condition)},
                          {"electrodes", to_string(r.electrodes)},
                          {"schedule", schedule_json(r.schedule)},
                          {"seed", bt.seed},
                          {"edge_s", r.eeg.edge_s},
                          {"feature_edge_s", std::max(r.attended.edge_s, r.ignored.edge_s)},
                          {"eeg", stem + ".eeg.ctts"},
                          {"attended", stem + ".attended.ctts"},
                          {"ignored", stem + ".ignored.ctts"}});
    }
    json m{{"format", "ntrack-bundle"}, {"version", kVersion}, {"subjects", subjects}, {"trials", trials},
           {"metadata", json::parse(bundle.metadata_json)}};
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

Bundle read_bundle(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath)) fail(ErrorCode::MissingInputs, "missing " + mpath.string());
    json m;
    try {
        m = json::parse(read_file(mpath));
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, mpath.string() + ": " + e.what());
    }
    Bundle b;
    try {
        std::vector<std::string> missing;
        for (const auto& t : m.at("trials")) {
            for (const char* key : {"eeg", "attended", "ignored"}) {
                const fs::path p = dir / t.at(key).get<std::string>();
                if (!fs::exists(p)) missing.push_back(p.string());
            }
        }
        if (!missing.empty()) {
            std::string msg = "bundle " + dir.string() + " is missing:";
            for (const auto& p : missing) msg += " " + p;
            fail(ErrorCode::MissingInputs, msg);
        }
        for (const auto& t : m.at("trials")) {
            BundleTrial bt;
            auto& r = bt.record;
            r.eeg = read_ctts(dir / t.at("eeg").get<std::string>());
            r.attended = read_feature(dir / t.at("attended").get<std::string>());
            r.ignored = read_feature(dir / t.at("ignored").get<std::string>());
            r.eeg.edge_s = t.value("edge_s", 0.0);
            r.attended.edge_s = r.ignored.edge_s = t.value("feature_edge_s", 0.0);
            r.subject_id = t.at("subject").get<std::string>();
            r.trial_id = t.at("trial").get<std::string>();
            r.condition = condition_from_string(t.at("condition").get<std::string>());
            r.electrodes = electrode_set_from_string(t.value("electrodes", std::string("scalp")));
            if (!t.at("schedule").is_null()) r.schedule = SwitchSchedule{t["schedule"].at("t1").get<double>(), t["schedule"].at("t2").get<double>()};
            bt.seed = t.value("seed", std::uint64_t{0});
            r.validate();
            b.trials.push_back(std::move(bt));
        }
        b.metadata_json = m.value("metadata", json::object()).dump();
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, mpath.string() + ": " + e.what());
    }
    return b;
}

std::string correlations_csv(const std::vector<CorrelationResult>& results) {
    std::string out = "subject,condition,direction,electrode_set,feature_kind,fold,test_trial,r_attended,r_ignored\n";
    for (const auto& r : results) {
        for (std::size_t f = 0; f < r.r_attended.size(); ++f) {
            out += csv_field(r.subject_id) + "," + to_string(r.condition) + "," + to_string(r.direction) + "," + to_string(r.electrode_set) +
                   "," + to_string(r.feature_kind) + "," + std::to_string(f) + "," + csv_field(r.test_trials[f]) + "," + num(r.r_attended[f]) +
                   "," + num(r.r_ignored[f]) + "\n";
        }
    }
    return out;
}

std::string scan_csv(const std::vector<ScanCurve>& curves) {
    std::string out = "subject,condition,direction,electrode_set,window_start,window_stop,window_center,r_attended,ci_attended,r_ignored,ci_ignored\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.windows.size(); ++i) {
            out += csv_field(c.subject_id) + "," + to_string(c.condition) + "," + to_string(c.direction) + "," + to_string(c.electrode_set) + "," +
                   num(c.windows[i].start) + "," + num(c.windows[i].stop) + "," + num(c.windows[i].center()) + "," + num(c.r_attended[i]) + "," +
                   num(c.ci_attended[i]) + "," + num(c.r_ignored[i]) + "," + num(c.ci_ignored[i]) + "\n";
        }
    }
    return out;
}

std::string classification_csv(const std::vector<ClassificationResult>& results) {
    std::string out = "subject,condition,window_length,trial,model,window_start,r_attended,r_ignored,tie,correct\n";
    for (const auto& r : results) {
        for (const auto& w : r.windows) {
            out += csv_field(r.subject_id) + "," + to_string(r.condition) + "," + num(r.window_length) + "," + csv_field(w.trial_id) + "," +
                   std::to_string(w.model) + "," + num(w.start_s) + "," + num(w.r_attended) + "," + num(w.r_ignored) + "," +
                   (w.tie ? "1" : "0") + "," + (w.correct ? "1" : "0") + "\n";
        }
    }
    return out;
}

std::string classification_summary_csv(const std::vector<ClassificationResult>& results) {
    std::string out = "subject,condition,window_length,n_windows,n_correct,accuracy\n";
    for (const auto& r : results) {
        out += csv_field(r.subject_id) + "," + to_string(r.condition) + "," + num(r.window_length) + "," + std::to_string(r.n_windows) + "," +
               std::to_string(r.n_correct) + "," + num(r.accuracy()) + "\n";
    }
    return out;
}

std::string stat_json(const StatResult& res) {
    json clusters = json::array();
    for (const auto& c : res.clusters) {
        clusters.push_back({{"row", res.labels.at(c.row)}, {"start_s", c.start}, {"stop_s", c.stop}, {"min_p", c.min_p}});
    }
    auto rows = [](const Matrix& m) {
        json a = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            std::vector<double> v(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(r, j);
            a.push_back(v);
        }
        return a;
    };
    json j{{"mode", res.mode == StatMode::per_channel ? "per_channel" : "channel_mean"},
           {"n_perm", res.n_perm},
           {"alpha", res.alpha},
           {"labels", res.labels},
           {"lags_s", res.grid.times()},
           {"t", rows(res.t_map)},
           {"tfce", rows(res.tfce_map)},
           {"p", rows(res.p_map)},
           {"clusters", clusters}};
    return j.dump(2) + "\n";
}

std::string stat_csv(const StatResult& res) {
    std::string out = "row,lag_s,t,tfce,p\n";
    for (Eigen::Index r = 0; r < res.t_map.rows(); ++r) {
        for (Eigen::Index j = 0; j < res.t_map.cols(); ++j) {
            out += csv_field(res.labels[static_cast<std::size_t>(r)]) + "," + num(res.grid.time(static_cast<std::size_t>(j))) + "," +
                   num(res.t_map(r, j)) + "," + num(res.tfce_map(r, j)) + "," + num(res.p_map(r, j)) + "\n";
        }
    }
    return out;
}

}  // namespace ntrack::io
