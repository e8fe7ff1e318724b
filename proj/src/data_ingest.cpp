#include "prism/data_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>

#include "prism/error.hpp"
#include "prism/text_format.hpp"

namespace prism {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    return in;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& msg)
{
    throw Error(ErrorCode::ParseError, source + " line " + std::to_string(line) + ": " + msg);
}

Date parse_date_cell(std::string_view cell, const std::string& source, std::size_t line)
{
    const auto d = parse_iso_date(trim(cell));
    if (!d) {
        parse_fail(source, line, "bad date '" + std::string(trim(cell)) + "'");
    }
    return *d;
}

/// Checks weekly spacing of raw dates and returns the week-ending stamp of the first row.
WeekStamp weekly_grid(const std::vector<Date>& dates, const std::vector<std::size_t>& lines,
                      const std::string& source)
{
    const auto wd = std::chrono::weekday(dates.front());
    for (std::size_t i = 1; i < dates.size(); ++i) {
        const auto step = (dates[i] - dates[i - 1]).count();
        if (step <= 0) {
            parse_fail(source, lines[i], "dates must be strictly increasing");
        }
        if (std::chrono::weekday(dates[i]) != wd) {
            throw Error(ErrorCode::NonSaturdayGrid,
                        source + " line " + std::to_string(lines[i]) + ": " +
                            format_iso_date(dates[i]) + " is off the weekly grid set by " +
                            format_iso_date(dates.front()));
        }
        if (step != 7) {
            throw Error(ErrorCode::GapError, source + " line " + std::to_string(lines[i]) +
                                                 ": missing week(s) between " +
                                                 format_iso_date(dates[i - 1]) + " and " +
                                                 format_iso_date(dates[i]));
        }
    }
    return WeekStamp::week_ending(dates.front());
}

} // namespace

WeeklySeries parse_claims_csv(std::istream& in, const ClaimsCsvOptions& opt,
                              const std::string& source)
{
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::size_t> date_col;
    std::optional<std::size_t> value_col;
    std::vector<Date> dates;
    std::vector<std::size_t> lines;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto cells = split_csv_line(body);
        if (!date_col) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                const auto name = lower(trim(cells[j]));
                for (const auto& alias : opt.date_columns) {
                    if (name == lower(alias)) {
                        date_col = j;
                    }
                }
            }
            if (!date_col) {
                parse_fail(source, lineno, "header lacks a date column");
            }
            for (std::size_t j = 0; j < cells.size(); ++j) {
                if (j == *date_col) {
                    continue;
                }
                if (opt.value_column.empty() || lower(trim(cells[j])) == lower(opt.value_column)) {
                    if (value_col && opt.value_column.empty()) {
                        parse_fail(source, lineno, "several value columns; name one explicitly");
                    }
                    value_col = j;
                }
            }
            if (!value_col) {
                parse_fail(source, lineno,
                           opt.value_column.empty() ? "header lacks a value column"
                                                    : "no column named '" + opt.value_column + "'");
            }
            continue;
        }
        if (cells.size() <= std::max(*date_col, *value_col)) {
            parse_fail(source, lineno, "expected at least " +
                                           std::to_string(std::max(*date_col, *value_col) + 1) +
                                           " fields");
        }
        const Date d = parse_date_cell(cells[*date_col], source, lineno);
        const auto v = parse_number(cells[*value_col]);
        if (!v) {
            parse_fail(source, lineno, "non-numeric value '" + std::string(trim(cells[*value_col])) + "'");
        }
        dates.push_back(d);
        lines.push_back(lineno);
        values.push_back(*v);
    }
    if (!date_col) {
        throw Error(ErrorCode::ParseError, source + ": empty file");
    }
    if (values.empty()) {
        throw Error(ErrorCode::ParseError, source + ": no data rows");
    }
    const WeekStamp start = weekly_grid(dates, lines, source);
    return WeeklySeries(start, std::move(values));
}

WeeklySeries parse_claims_csv(const std::filesystem::path& path, const ClaimsCsvOptions& opt)
{
    auto in = open_input(path);
    return parse_claims_csv(in, opt, path.string());
}

void write_series_csv(std::ostream& out, const WeeklySeries& s, const std::string& value_header)
{
    out << "DATE," << value_header << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << s.week(i).iso() << ',' << format_number(s[i]) << '\n';
    }
}

ExogenousPanel parse_trends_csv(std::istream& in, const std::string& batch_id,
                                const std::string& source)
{
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> terms;
    bool have_header = false;
    std::vector<Date> dates;
    std::vector<std::size_t> lines;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto cells = split_csv_line(body);
        if (!have_header) {
            const auto first = lower(trim(cells.front()));
            if (first != "week" && first != "date") {
                continue; // export preamble such as "Category: All categories"
            }
            if (cells.size() < 2) {
                parse_fail(source, lineno, "header names no terms");
            }
            for (std::size_t j = 1; j < cells.size(); ++j) {
                std::string name(trim(cells[j]));
                if (const auto pos = name.find(": ("); pos != std::string::npos && name.back() == ')') {
                    name.erase(pos);
                }
                terms.push_back(std::move(name));
            }
            have_header = true;
            continue;
        }
        if (cells.size() != terms.size() + 1) {
            parse_fail(source, lineno, "expected " + std::to_string(terms.size() + 1) +
                                           " fields, got " + std::to_string(cells.size()));
        }
        dates.push_back(parse_date_cell(cells[0], source, lineno));
        lines.push_back(lineno);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const auto cell = trim(cells[j]);
            double v = 0.0;
            if (cell == "<1") {
                v = 0.0;
            } else {
                const auto parsed = parse_number(cell);
                if (!parsed) {
                    parse_fail(source, lineno, "non-numeric value '" + std::string(cell) + "'");
                }
                v = *parsed;
            }
            if (v < 0.0 || v > 100.0) {
                throw Error(ErrorCode::OutOfRangeValue,
                            source + " line " + std::to_string(lineno) + ": value " +
                                format_number(v) + " for '" + terms[j - 1] +
                                "' outside [0, 100]");
            }
            values.push_back(v);
        }
    }
    if (!have_header) {
        throw Error(ErrorCode::ParseError, source + ": no header row starting with Week or date");
    }
    if (dates.empty()) {
        throw Error(ErrorCode::ParseError, source + ": no data rows");
    }
    const WeekStamp start = weekly_grid(dates, lines, source);
    return ExogenousPanel(start, std::move(terms), std::move(values), batch_id);
}

TrendsBatch make_trends_batch(const std::vector<ExogenousPanel>& parts, const std::string& batch_id)
{
    if (parts.empty()) {
        throw Error(ErrorCode::ParseError, "batch " + batch_id + " lists no files");
    }
    const auto& base = parts.front();
    std::vector<std::string> terms;
    for (const auto& p : parts) {
        if (p.start() != base.start() || p.rows() != base.rows()) {
            throw Error(ErrorCode::GridMismatch,
                        "batch " + batch_id + ": weeks " + p.start().iso() + " .. " + p.end().iso() +
                            " differ from " + base.start().iso() + " .. " + base.end().iso());
        }
        terms.insert(terms.end(), p.terms().begin(), p.terms().end());
    }
    std::vector<double> values;
    values.reserve(base.rows() * terms.size());
    for (std::size_t i = 0; i < base.rows(); ++i) {
        for (const auto& p : parts) {
            const auto r = p.row(i);
            values.insert(values.end(), r.begin(), r.end());
        }
    }
    ExogenousPanel panel(base.start(), std::move(terms), std::move(values), batch_id);
    TrendsBatch b{batch_id, panel.start(), panel.end(), std::move(panel)};
    if (b.span_weeks() > kMaxBatchWeeks) {
        throw Error(ErrorCode::CoverageTooLong, "batch " + batch_id + " spans " +
                                                    std::to_string(b.span_weeks()) +
                                                    " weeks, limit " +
                                                    std::to_string(kMaxBatchWeeks));
    }
    return b;
}

TrendsBatch parse_trends_batch(const std::vector<std::filesystem::path>& paths,
                               const std::string& batch_id)
{
    std::vector<ExogenousPanel> parts;
    for (const auto& p : paths) {
        auto in = open_input(p);
        parts.push_back(parse_trends_csv(in, batch_id, p.string()));
    }
    return make_trends_batch(parts, batch_id);
}

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir)
{
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    const std::string source = "manifest";
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            parse_fail(source, lineno, "expected key=value");
        }
        const std::string key = lower(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (value.empty()) {
            parse_fail(source, lineno, "empty value for '" + key + "'");
        }
        if (key == "batch") {
            out.push_back(ManifestEntry{value, std::nullopt, std::nullopt, {}});
            continue;
        }
        if (out.empty()) {
            parse_fail(source, lineno, "'" + key + "' before any batch= line");
        }
        auto& cur = out.back();
        if (key == "start" || key == "end") {
            const auto d = parse_iso_date(value);
            if (!d) {
                parse_fail(source, lineno, "bad date '" + value + "'");
            }
            (key == "start" ? cur.start : cur.end) = WeekStamp::week_ending(*d);
        } else if (key == "file") {
            std::filesystem::path p(value);
            cur.files.push_back(p.is_absolute() ? p : base_dir / p);
        } else {
            parse_fail(source, lineno, "unknown key '" + key + "'");
        }
    }
    for (const auto& e : out) {
        if (e.files.empty()) {
            throw Error(ErrorCode::ParseError, "manifest batch " + e.batch_id + " lists no files");
        }
    }
    return out;
}

std::vector<TrendsBatch> load_manifest(const std::filesystem::path& path)
{
    auto in = open_input(path);
    const auto entries = parse_manifest(in, path.parent_path());
    std::vector<TrendsBatch> batches;
    for (const auto& e : entries) {
        TrendsBatch b = parse_trends_batch(e.files, e.batch_id);
        if (e.start || e.end) {
            const WeekStamp from = e.start.value_or(b.first_week);
            const WeekStamp to = e.end.value_or(b.last_week);
            if (!b.panel.contains(from) || !b.panel.contains(to) || from > to) {
                throw Error(ErrorCode::GridMismatch,
                            "batch " + e.batch_id + " declares " + from.iso() + " .. " + to.iso() +
                                " but its files cover " + b.first_week.iso() + " .. " +
                                b.last_week.iso());
            }
            b.panel = b.panel.slice(from, to);
            b.first_week = from;
            b.last_week = to;
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

std::size_t BatchSchedule::batch_for(WeekStamp origin, int horizon) const
{
    const auto h = map_.find(horizon);
    if (h != map_.end()) {
        const auto it = h->second.find(origin);
        if (it != h->second.end()) {
            return it->second;
        }
    }
    throw Error(ErrorCode::UncoveredOrigin, "no batch scheduled for origin " + origin.iso() +
                                                " horizon " + std::to_string(horizon));
}

BatchSchedule build_schedule(const std::vector<TrendsBatch>& batches, WeekStamp from,
                             WeekStamp to, const PrismConfig& cfg)
{
    BatchSchedule s;
    for (int l : cfg.horizons) {
        for (WeekStamp t = from; t <= to; t = t + 1) {
            const WeekStamp need = t - (l + cfg.N);
            std::optional<std::size_t> best;
            for (std::size_t b = 0; b < batches.size(); ++b) {
                const auto& tb = batches[b];
                if (tb.first_week <= need && tb.last_week >= t &&
                    (!best || tb.first_week > batches[*best].first_week)) {
                    best = b;
                }
            }
            if (!best) {
                throw Error(ErrorCode::UncoveredOrigin,
                            "no batch covers origin " + t.iso() + " at horizon " +
                                std::to_string(l) + " (needs " + need.iso() + " .. " + t.iso() + ")");
            }
            s.assign(l, t, *best);
        }
    }
    return s;
}

ExogenousSelector make_selector(const std::vector<TrendsBatch>& batches,
                                const BatchSchedule& schedule)
{
    return [&batches, &schedule](WeekStamp origin, int horizon) -> const ExogenousPanel* {
        return &batches.at(schedule.batch_for(origin, horizon)).panel;
    };
}

} // namespace prism
