#include "tskirt/dataio.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace tskirt {

Dataset::Dataset(std::vector<StudentHistory> students) : students_(std::move(students)) {
    for (auto& s : students_) {
        std::stable_sort(s.records.begin(), s.records.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    }
}

Dataset Dataset::from_records(const std::vector<InteractionRecord>& records) {
    std::vector<StudentHistory> students;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.emplace(r.student_id, students.size());
        if (inserted) {
            students.push_back(StudentHistory{r.student_id, {}});
        }
        students[it->second].records.push_back(r);
    }
    return Dataset(std::move(students));
}

std::size_t Dataset::response_count() const {
    return std::accumulate(students_.begin(), students_.end(), std::size_t{0},
                           [](std::size_t n, const auto& s) { return n + s.records.size(); });
}

DatasetSummary Dataset::summary() const {
    DatasetSummary out;
    out.students = students_.size();
    std::set<std::string> items;
    std::size_t correct = 0;
    for (const auto& s : students_) {
        for (const auto& r : s.records) {
            items.insert(r.item_id);
            correct += r.correct ? 1 : 0;
            ++out.responses;
        }
    }
    out.items = items.size();
    out.percent_correct = out.responses == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(out.responses);
    return out;
}

DataFormat parse_data_format(const std::string& name) {
    if (name == "csv") {
        return DataFormat::CSV;
    }
    if (name == "jsonl") {
        return DataFormat::JSONL;
    }
    throw std::invalid_argument("unknown data format '" + name + "' (expected csv or jsonl)");
}

namespace {

const std::vector<std::string> kColumns{"student_id", "item_id", "correct", "timestamp"};

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

bool parse_int(const std::string& text, std::int64_t& value) {
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

// Returns an empty string on success, otherwise the reason.
std::string validate(InteractionRecord& rec, const std::string& correct, const std::string& timestamp) {
    if (rec.student_id.empty()) {
        return "empty student_id";
    }
    if (rec.item_id.empty()) {
        return "empty item_id";
    }
    if (correct == "1") {
        rec.correct = true;
    } else if (correct == "0") {
        rec.correct = false;
    } else {
        return "correct must be 0 or 1, got '" + correct + "'";
    }
    if (!parse_int(timestamp, rec.timestamp) || rec.timestamp < 0) {
        return "timestamp must be a nonnegative integer, got '" + timestamp + "'";
    }
    return {};
}

std::string json_scalar_text(const nlohmann::json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "1" : "0";
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<std::int64_t>());
    }
    if (v.is_number_unsigned()) {
        return std::to_string(v.get<std::uint64_t>());
    }
    return v.dump();
}

} // namespace

LoadResult load(std::istream& in, DataFormat format, bool strict) {
    LoadResult result;
    std::vector<InteractionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::size_t> column_of(kColumns.size());
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        InteractionRecord rec;
        std::string correct;
        std::string timestamp;
        std::string reason;
        if (format == DataFormat::CSV) {
            const auto fields = split_commas(line);
            if (!have_header) {
                for (std::size_t k = 0; k < kColumns.size(); ++k) {
                    const auto it = std::find(fields.begin(), fields.end(), kColumns[k]);
                    if (it == fields.end() || fields.size() != kColumns.size()) {
                        throw DataError("line " + std::to_string(line_no) +
                                        ": expected header 'student_id,item_id,correct,timestamp'");
                    }
                    column_of[k] = static_cast<std::size_t>(it - fields.begin());
                }
                have_header = true;
                continue;
            }
            if (fields.size() != kColumns.size()) {
                reason = "expected 4 fields, got " + std::to_string(fields.size());
            } else {
                rec.student_id = fields[column_of[0]];
                rec.item_id = fields[column_of[1]];
                correct = fields[column_of[2]];
                timestamp = fields[column_of[3]];
            }
        } else {
            try {
                const auto obj = nlohmann::json::parse(line);
                if (!obj.is_object()) {
                    reason = "expected a JSON object";
                } else {
                    for (const auto& key : kColumns) {
                        if (!obj.contains(key)) {
                            reason = "missing key '" + key + "'";
                            break;
                        }
                    }
                    if (reason.empty()) {
                        rec.student_id = json_scalar_text(obj["student_id"]);
                        rec.item_id = json_scalar_text(obj["item_id"]);
                        correct = json_scalar_text(obj["correct"]);
                        timestamp = json_scalar_text(obj["timestamp"]);
                    }
                }
            } catch (const nlohmann::json::parse_error& e) {
                reason = std::string("invalid JSON: ") + e.what();
            }
        }
        if (reason.empty()) {
            reason = validate(rec, correct, timestamp);
        }
        if (!reason.empty()) {
            result.rejected.push_back(RejectedRow{line_no, reason});
            continue;
        }
        records.push_back(std::move(rec));
    }

    if (strict && !result.rejected.empty()) {
        std::ostringstream msg;
        msg << result.rejected.size() << " malformed row(s):";
        const std::size_t shown = std::min<std::size_t>(result.rejected.size(), 20);
        for (std::size_t i = 0; i < shown; ++i) {
            msg << "\n  line " << result.rejected[i].line << ": " << result.rejected[i].reason;
        }
        if (shown < result.rejected.size()) {
            msg << "\n  ...";
        }
        throw DataError(msg.str());
    }
    result.data = Dataset::from_records(records);
    return result;
}

LoadResult load(const std::filesystem::path& path, DataFormat format, bool strict) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return load(in, format, strict);
}

void write(std::ostream& out, const Dataset& data, DataFormat format) {
    if (format == DataFormat::CSV) {
        out << "student_id,item_id,correct,timestamp\n";
    }
    for (const auto& s : data.students()) {
        for (const auto& r : s.records) {
            if (format == DataFormat::CSV) {
                out << r.student_id << ',' << r.item_id << ',' << (r.correct ? 1 : 0) << ',' << r.timestamp << '\n';
            } else {
                nlohmann::ordered_json obj;
                obj["student_id"] = r.student_id;
                obj["item_id"] = r.item_id;
                obj["correct"] = r.correct ? 1 : 0;
                obj["timestamp"] = r.timestamp;
                out << obj.dump() << '\n';
            }
        }
    }
}

void write(const std::filesystem::path& path, const Dataset& data, DataFormat format) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    write(out, data, format);
}

Dataset preprocess(const Dataset& data, const PreprocessConfig& config) {
    std::vector<StudentHistory> kept;
    for (const auto& s : data.students()) {
        // Walk backwards so the most recent attempts are counted first.
        std::unordered_map<std::string, std::size_t> attempts;
        std::vector<bool> keep(s.records.size(), false);
        for (std::size_t i = s.records.size(); i-- > 0;) {
            if (++attempts[s.records[i].item_id] <= config.max_attempts_per_item) {
                keep[i] = true;
            }
        }
        StudentHistory out{s.student_id, {}};
        for (std::size_t i = 0; i < s.records.size(); ++i) {
            if (keep[i]) {
                out.records.push_back(s.records[i]);
            }
        }
        if (out.records.size() >= config.min_responses) {
            kept.push_back(std::move(out));
        }
    }
    return Dataset(std::move(kept));
}

DataSplit split(const Dataset& data, const SplitPolicy& policy, std::uint64_t seed) {
    DataSplit out;
    if (const auto* by_student = std::get_if<ByStudentFraction>(&policy)) {
        const double f = by_student->train_fraction;
        if (!(f > 0.0 && f < 1.0)) {
            throw std::invalid_argument("student split fraction must lie in (0, 1)");
        }
        const std::size_t n = data.students().size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
        std::vector<bool> is_train(n, false);
        for (std::size_t i = 0; i < n_train; ++i) {
            is_train[order[i]] = true;
        }
        std::vector<StudentHistory> train;
        std::vector<StudentHistory> eval;
        for (std::size_t i = 0; i < n; ++i) {
            (is_train[i] ? train : eval).push_back(data.students()[i]);
        }
        out.train = Dataset(std::move(train));
        out.eval = Dataset(std::move(eval));
    } else {
        const auto cutoff = std::get<ByTimeCutoff>(policy).cutoff;
        std::vector<StudentHistory> train;
        std::vector<StudentHistory> eval;
        for (const auto& s : data.students()) {
            StudentHistory before{s.student_id, {}};
            StudentHistory after{s.student_id, {}};
            for (const auto& r : s.records) {
                (r.timestamp <= cutoff ? before : after).records.push_back(r);
            }
            if (!before.records.empty()) {
                train.push_back(std::move(before));
            }
            if (!after.records.empty()) {
                eval.push_back(std::move(after));
            }
        }
        out.train = Dataset(std::move(train));
        out.eval = Dataset(std::move(eval));
    }
    if (out.train.empty() || out.eval.empty()) {
        throw std::invalid_argument("degenerate split: one side is empty");
    }
    return out;
}

} // namespace tskirt
