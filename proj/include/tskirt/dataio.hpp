#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tskirt {

/// Raised when an input file cannot be read or fails strict parsing.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InteractionRecord {
    std::string student_id;
    std::string item_id;
    bool correct = false;
    std::int64_t timestamp = 0;

    friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

/// One student's records, ordered by timestamp with input order breaking
/// ties.
struct StudentHistory {
    std::string student_id;
    std::vector<InteractionRecord> records;

    friend bool operator==(const StudentHistory&, const StudentHistory&) = default;
};

struct DatasetSummary {
    std::size_t students = 0;
    std::size_t items = 0;
    std::size_t responses = 0;
    double percent_correct = 0.0;
};

/// Records grouped per student. Students keep the order of their first
/// appearance in the input.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<StudentHistory> students);

    /// Groups flat records per student and sorts each group stably by
    /// timestamp.
    static Dataset from_records(const std::vector<InteractionRecord>& records);

    const std::vector<StudentHistory>& students() const { return students_; }
    bool empty() const { return students_.empty(); }
    std::size_t response_count() const;
    DatasetSummary summary() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<StudentHistory> students_;
};

enum class DataFormat { CSV, JSONL };

DataFormat parse_data_format(const std::string& name);

struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
};

struct LoadResult {
    Dataset data;
    std::vector<RejectedRow> rejected;
};

/// Reads an interaction log. CSV has the header
/// `student_id,item_id,correct,timestamp`; JSONL carries the same keys per
/// line. In strict mode any malformed row raises DataError listing line
/// numbers; otherwise malformed rows are dropped and reported.
LoadResult load(std::istream& in, DataFormat format, bool strict = true);
LoadResult load(const std::filesystem::path& path, DataFormat format, bool strict = true);

void write(std::ostream& out, const Dataset& data, DataFormat format);
void write(const std::filesystem::path& path, const Dataset& data, DataFormat format);

struct PreprocessConfig {
    std::size_t min_responses = 5;
    std::size_t max_attempts_per_item = 4;
};

/// Keeps only the most recent `max_attempts_per_item` responses of every
/// (student, item) pair, then drops students left with fewer than
/// `min_responses` responses.
Dataset preprocess(const Dataset& data, const PreprocessConfig& config = {});

/// Students are shuffled with the seed; the first round(fraction * n) go
/// to the training side as whole histories.
struct ByStudentFraction {
    double train_fraction = 0.5;
};

/// Records at or before `cutoff` train, later records evaluate.
struct ByTimeCutoff {
    std::int64_t cutoff = 0;
};

using SplitPolicy = std::variant<ByStudentFraction, ByTimeCutoff>;

struct DataSplit {
    Dataset train;
    Dataset eval;
};

/// Throws std::invalid_argument if either side would be empty.
DataSplit split(const Dataset& data, const SplitPolicy& policy, std::uint64_t seed);

} // namespace tskirt
