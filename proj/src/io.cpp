#include "keysynth/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"

namespace keysynth::io {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("bad numeric field: '" + s + "'");
    return v;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

bool sequence_ok(const KeystrokeSequence& seq) {
    if (seq.events.empty())
        return false;
    try {
        validate_sequence(seq);
    } catch (const Error&) {
        return false;
    }
    return true;
}

} // namespace

std::vector<KeystrokeSequence> read_events_csv(const std::string& path,
                                               LoadStats* stats) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");

    LoadStats local;
    std::vector<KeystrokeSequence> samples;
    std::string line;
    if (!std::getline(in, line))
        throw IoError("'" + path + "' is empty");
    // header is fixed; tolerate trailing \r from foreign editors
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "subject_id,sample_id,key_code,press_time_ms,release_time_ms")
        throw IoError("'" + path + "' has an unexpected header: " + line);

    KeystrokeSequence cur;
    bool have_cur = false;
    std::size_t line_no = 1;

    auto flush = [&]() {
        if (!have_cur)
            return;
        if (sequence_ok(cur)) {
            samples.push_back(std::move(cur));
            ++local.samples_ok;
        } else {
            ++local.samples_skipped;
        }
        cur = KeystrokeSequence{};
        have_cur = false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": expected 5 fields, got " +
                          std::to_string(fields.size()));
        if (have_cur && (fields[0] != cur.subject_id || fields[1] != cur.sample_id))
            flush();
        if (!have_cur) {
            cur.subject_id = fields[0];
            cur.sample_id = fields[1];
            have_cur = true;
        }
        KeyEvent e;
        try {
            e.key_code = static_cast<int>(parse_double(fields[2]));
            e.press_time = parse_double(fields[3]);
            e.release_time = parse_double(fields[4]);
        } catch (const IoError& err) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " +
                          err.what());
        }
        cur.events.push_back(e);
    }
    flush();

    if (stats)
        *stats = local;
    return samples;
}

void write_events_csv(const std::string& path,
                      const std::vector<KeystrokeSequence>& samples) {
    std::ostringstream out;
    out << "subject_id,sample_id,key_code,press_time_ms,release_time_ms\n";
    for (const auto& seq : samples) {
        for (const auto& e : seq.events) {
            out << seq.subject_id << ',' << seq.sample_id << ',' << e.key_code
                << ',' << format_double(e.press_time) << ','
                << format_double(e.release_time) << '\n';
        }
    }
    write_file(path, out.str());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

} // namespace keysynth::io
