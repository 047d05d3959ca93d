#include "etz/trial_data.hpp"

#include "etz/error.hpp"

#include <charconv>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace etz {
namespace {

struct CsvLine {
    std::size_t number;  // 1-based line number in the input
    std::vector<std::string> cells;
};

// Splits one CSV record. Double-quoted cells may contain commas; a doubled
// quote inside quotes is a literal quote.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"' && cell.empty()) {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    if (quoted) {
        throw Error(ErrorCode::bad_cell,
                    "line " + std::to_string(line_no) + ": unterminated quoted cell");
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::vector<CsvLine> read_lines(std::string_view text) {
    std::vector<CsvLine> lines;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    // UTF-8 byte order mark
    if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!line.empty()) lines.push_back({line_no, split_record(line, line_no)});
        if (end == text.size()) break;
        pos = end + 1;
    }
    return lines;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_value(std::string_view raw, std::size_t line_no,
                                  std::string_view column) {
    const std::string_view s = trim(raw);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::bad_cell, "line " + std::to_string(line_no) + ", column " +
                                             std::string(column) + ": not a finite number: '" +
                                             std::string(s) + "'");
    }
    return v;
}

std::size_t parse_visit(std::string_view raw, std::size_t line_no) {
    const std::string_view s = trim(raw);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::visit_out_of_range,
                    "line " + std::to_string(line_no) + ", column visit: not a visit index: '" +
                        std::string(s) + "'");
    }
    if (v < 1) {
        throw Error(ErrorCode::visit_out_of_range,
                    "line " + std::to_string(line_no) + ": visit index must be >= 1");
    }
    return v;
}

std::string format_value(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void check_row_width(const CsvLine& line, std::size_t width) {
    if (line.cells.size() != width) {
        throw Error(ErrorCode::bad_cell, "line " + std::to_string(line.number) + ": expected " +
                                             std::to_string(width) + " cells, found " +
                                             std::to_string(line.cells.size()));
    }
}

}  // namespace

TrialDataset TrialDataset::create(std::vector<SubjectRecord> subjects, std::size_t visit_count,
                                  std::string control_label) {
    if (visit_count < 2) {
        throw Error(ErrorCode::invalid_argument,
                    "need at least 2 visits (baseline and milestone), got " +
                        std::to_string(visit_count));
    }
    TrialDataset d;
    d.visit_count_ = visit_count;
    d.control_label_ = std::move(control_label);

    std::unordered_set<std::string> ids;
    std::map<std::string, std::size_t> per_arm;
    for (const auto& s : subjects) {
        if (!ids.insert(s.subject_id).second) {
            throw Error(ErrorCode::duplicate_subject, "duplicate subject_id '" + s.subject_id + "'");
        }
        if (s.arm.empty()) {
            throw Error(ErrorCode::invalid_argument, "subject '" + s.subject_id + "' has no arm");
        }
        if (s.outcomes.size() != visit_count) {
            throw Error(ErrorCode::invalid_argument,
                        "subject '" + s.subject_id + "' has " + std::to_string(s.outcomes.size()) +
                            " outcomes, expected " + std::to_string(visit_count));
        }
        for (const auto& y : s.outcomes) {
            if (y && !std::isfinite(*y)) {
                throw Error(ErrorCode::non_finite,
                            "subject '" + s.subject_id + "' has a non-finite outcome");
            }
        }
        ++per_arm[s.arm];
    }
    if (!per_arm.contains(d.control_label_)) {
        throw Error(ErrorCode::missing_control,
                    "control label '" + d.control_label_ + "' does not occur in the data");
    }
    if (per_arm.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "need at least one non-control arm");
    }
    for (const auto& [arm, count] : per_arm) {
        if (count < 2) {
            throw Error(ErrorCode::insufficient_subjects,
                        "arm '" + arm + "' has " + std::to_string(count) +
                            " subject(s); at least 2 are required");
        }
        d.arms_.insert(arm);
    }
    d.subjects_ = std::move(subjects);
    return d;
}

std::vector<std::string> TrialDataset::treatment_arms() const {
    std::vector<std::string> out;
    for (const auto& a : arms_) {
        if (a != control_label_) out.push_back(a);
    }
    return out;
}

TrialDataset parse_wide(std::string_view csv_text, const std::string& control_label) {
    const auto lines = read_lines(csv_text);
    if (lines.empty()) throw Error(ErrorCode::malformed_header, "empty input");

    const auto& header = lines.front().cells;
    if (header.size() < 4 || trim(header[0]) != "subject_id" || trim(header[1]) != "arm") {
        throw Error(ErrorCode::malformed_header,
                    "wide header must be subject_id,arm,y1,...,ym with m >= 2");
    }
    const std::size_t m = header.size() - 2;
    for (std::size_t v = 1; v <= m; ++v) {
        if (trim(header[v + 1]) != "y" + std::to_string(v)) {
            throw Error(ErrorCode::malformed_header, "wide header column " + std::to_string(v + 2) +
                                                         " must be 'y" + std::to_string(v) + "'");
        }
    }

    std::vector<SubjectRecord> subjects;
    subjects.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto& line = lines[r];
        check_row_width(line, header.size());
        SubjectRecord rec;
        rec.subject_id = std::string(trim(line.cells[0]));
        rec.arm = std::string(trim(line.cells[1]));
        rec.outcomes.reserve(m);
        for (std::size_t v = 1; v <= m; ++v) {
            rec.outcomes.push_back(
                parse_value(line.cells[v + 1], line.number, "y" + std::to_string(v)));
        }
        subjects.push_back(std::move(rec));
    }
    return TrialDataset::create(std::move(subjects), m, control_label);
}

TrialDataset parse_long(std::string_view csv_text, const std::string& control_label,
                        std::optional<std::size_t> visit_count) {
    const auto lines = read_lines(csv_text);
    if (lines.empty()) throw Error(ErrorCode::malformed_header, "empty input");
    const auto& header = lines.front().cells;
    if (header.size() != 4 || trim(header[0]) != "subject_id" || trim(header[1]) != "arm" ||
        trim(header[2]) != "visit" || trim(header[3]) != "value") {
        throw Error(ErrorCode::malformed_header, "long header must be subject_id,arm,visit,value");
    }

    struct Row {
        std::size_t visit;
        std::optional<double> value;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, std::pair<std::string, std::vector<Row>>> by_subject;
    std::size_t max_visit = 0;

    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto& line = lines[r];
        check_row_width(line, 4);
        std::string id(trim(line.cells[0]));
        std::string arm(trim(line.cells[1]));
        const std::size_t visit = parse_visit(line.cells[2], line.number);
        if (visit_count && visit > *visit_count) {
            throw Error(ErrorCode::visit_out_of_range,
                        "line " + std::to_string(line.number) + ": visit " +
                            std::to_string(visit) + " exceeds m = " + std::to_string(*visit_count));
        }
        const auto value = parse_value(line.cells[3], line.number, "value");
        max_visit = std::max(max_visit, visit);

        auto [it, inserted] = by_subject.try_emplace(id, arm, std::vector<Row>{});
        if (inserted) {
            order.push_back(id);
        } else if (it->second.first != arm) {
            throw Error(ErrorCode::conflicting_arm, "subject '" + id + "' listed under arms '" +
                                                        it->second.first + "' and '" + arm + "'");
        }
        for (const auto& existing : it->second.second) {
            if (existing.visit == visit) {
                throw Error(ErrorCode::duplicate_visit, "line " + std::to_string(line.number) +
                                                            ": duplicate row for subject '" + id +
                                                            "' visit " + std::to_string(visit));
            }
        }
        it->second.second.push_back({visit, value});
    }

    const std::size_t m = visit_count.value_or(max_visit);
    std::vector<SubjectRecord> subjects;
    subjects.reserve(order.size());
    for (const auto& id : order) {
        auto& [arm, rows] = by_subject.at(id);
        SubjectRecord rec{id, arm, std::vector<std::optional<double>>(m)};
        for (const auto& row : rows) rec.outcomes[row.visit - 1] = row.value;
        subjects.push_back(std::move(rec));
    }
    return TrialDataset::create(std::move(subjects), m, control_label);
}

TrialDataset parse_csv(std::string_view csv_text, const std::string& control_label) {
    const auto lines = read_lines(csv_text);
    if (lines.empty()) throw Error(ErrorCode::malformed_header, "empty input");
    const auto& header = lines.front().cells;
    if (header.size() == 4 && trim(header[2]) == "visit") {
        return parse_long(csv_text, control_label);
    }
    return parse_wide(csv_text, control_label);
}

std::string export_wide(const TrialDataset& d) {
    std::string out = "subject_id,arm";
    for (std::size_t v = 1; v <= d.visit_count(); ++v) out += ",y" + std::to_string(v);
    out += '\n';
    for (const auto& s : d.subjects()) {
        out += quote_if_needed(s.subject_id);
        out += ',';
        out += quote_if_needed(s.arm);
        for (const auto& y : s.outcomes) {
            out += ',';
            if (y) out += format_value(*y);
        }
        out += '\n';
    }
    return out;
}

std::string export_long(const TrialDataset& d) {
    std::string out = "subject_id,arm,visit,value\n";
    for (const auto& s : d.subjects()) {
        const std::string prefix = quote_if_needed(s.subject_id) + ',' + quote_if_needed(s.arm) + ',';
        for (std::size_t v = 1; v <= d.visit_count(); ++v) {
            out += prefix;
            out += std::to_string(v);
            out += ',';
            if (const auto& y = s.outcomes[v - 1]) out += format_value(*y);
            out += '\n';
        }
    }
    return out;
}

std::size_t CompleteCaseResult::dropped_total() const {
    std::size_t total = 0;
    for (const auto& [arm, n] : dropped_per_arm) total += n;
    return total;
}

CompleteCaseResult complete_cases(const TrialDataset& d,
                                  const std::set<std::size_t>& visits_needed) {
    for (const std::size_t v : visits_needed) {
        if (v < 1 || v > d.visit_count()) {
            throw Error(ErrorCode::visit_out_of_range,
                        "visit " + std::to_string(v) + " outside 1.." +
                            std::to_string(d.visit_count()));
        }
    }
    std::map<std::string, std::size_t> dropped;
    std::map<std::string, std::size_t> kept;
    for (const auto& arm : d.arms()) {
        dropped[arm] = 0;
        kept[arm] = 0;
    }
    std::vector<SubjectRecord> retained;
    retained.reserve(d.size());
    for (const auto& s : d.subjects()) {
        bool complete = true;
        for (const std::size_t v : visits_needed) complete = complete && s.outcomes[v - 1].has_value();
        if (complete) {
            retained.push_back(s);
            ++kept[s.arm];
        } else {
            ++dropped[s.arm];
        }
    }
    for (const auto& [arm, n] : kept) {
        if (n < 2) {
            throw Error(ErrorCode::insufficient_subjects,
                        "arm '" + arm + "' keeps " + std::to_string(n) +
                            " complete case(s) after listwise deletion; at least 2 are required");
        }
    }
    return {TrialDataset::create(std::move(retained), d.visit_count(), d.control_label()),
            std::move(dropped)};
}

CompleteCaseResult complete_cases_baseline_milestone(const TrialDataset& d) {
    return complete_cases(d, {1, d.milestone_visit()});
}

}  // namespace etz
