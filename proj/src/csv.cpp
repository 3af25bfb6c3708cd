#include "xme/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "xme/errors.hpp"

namespace xme {

namespace {

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        raise(ErrorCode::NonNumeric, "line " + std::to_string(line_no) + ", column " +
                                         std::string(column) + ": cannot parse '" +
                                         std::string(field) + "'");
    return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        double parsed = 0.0;
        std::from_chars(buf, buf + std::char_traits<char>::length(buf), parsed);
        if (parsed == v || (std::isnan(parsed) && std::isnan(v))) break;
    }
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoFailure, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
    out << content;
    if (!out) raise(ErrorCode::IoFailure, "short write to " + path);
}

StackedCsv parse_stacked_csv_text(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) raise(ErrorCode::MissingColumn, "empty file; header row required");

    const auto header = split_line(lines[0]);
    int col_s = -1, col_a = -1, col_y = -1, col_z = -1, col_prob = -1;
    std::vector<int> covariate_cols;
    StackedCsv out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string_view name = header[c];
        if (name == "S") col_s = static_cast<int>(c);
        else if (name == "A") col_a = static_cast<int>(c);
        else if (name == "Y") col_y = static_cast<int>(c);
        else if (name == "Z") col_z = static_cast<int>(c);
        else if (name == "prob") col_prob = static_cast<int>(c);
        else {
            covariate_cols.push_back(static_cast<int>(c));
            out.dataset.covariate_names.emplace_back(name);
        }
    }
    if (col_s < 0) raise(ErrorCode::MissingColumn, "required column S not found");
    if (col_a < 0) raise(ErrorCode::MissingColumn, "required column A not found");
    if (col_y < 0) raise(ErrorCode::MissingColumn, "required column Y not found");

    std::vector<double> probs;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_line(lines[li]);
        if (fields.size() != header.size())
            raise(ErrorCode::NonNumeric, "line " + std::to_string(li + 1) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
        StackedRow row;
        const auto label = parse_label(fields[static_cast<std::size_t>(col_s)]);
        if (!label)
            raise(ErrorCode::BadLabel,
                  "line " + std::to_string(li + 1) + ": S must be 'v' or 'rct', got '" +
                      std::string(fields[static_cast<std::size_t>(col_s)]) + "'");
        row.sample = *label;

        const double a = parse_number(fields[static_cast<std::size_t>(col_a)], li + 1, "A");
        if (a != 0.0 && a != 1.0)
            raise(ErrorCode::NonNumeric, "line " + std::to_string(li + 1) + ": A must be 0 or 1");
        row.treatment = static_cast<int>(a);
        if (row.sample == SampleLabel::Validation && row.treatment != 0)
            raise(ErrorCode::ValidationRowTreated,
                  "line " + std::to_string(li + 1) + ": validation rows must have A = 0");

        row.y_reported = parse_number(fields[static_cast<std::size_t>(col_y)], li + 1, "Y");
        if (col_z >= 0) {
            const std::string_view zf = fields[static_cast<std::size_t>(col_z)];
            if (!zf.empty()) row.z_true = parse_number(zf, li + 1, "Z");
        }
        if (col_prob >= 0) {
            const double e =
                parse_number(fields[static_cast<std::size_t>(col_prob)], li + 1, "prob");
            if (!(e > 0.0 && e < 1.0))
                raise(ErrorCode::ProbabilityOutOfRange,
                      "line " + std::to_string(li + 1) + ": prob must lie in (0,1)");
            probs.push_back(e);
        }
        row.covariates.reserve(covariate_cols.size());
        for (std::size_t j = 0; j < covariate_cols.size(); ++j)
            row.covariates.push_back(
                parse_number(fields[static_cast<std::size_t>(covariate_cols[j])], li + 1,
                             out.dataset.covariate_names[j]));
        out.dataset.rows.push_back(std::move(row));
    }
    if (col_prob >= 0) out.membership_probs = std::move(probs);
    return out;
}

StackedCsv parse_stacked_csv(const std::string& path) {
    return parse_stacked_csv_text(read_file(path));
}

std::string write_stacked_csv_text(const StackedCsv& data) {
    const StackedDataset& d = data.dataset;
    bool any_z = false;
    for (const auto& r : d.rows)
        if (r.z_true.has_value()) any_z = true;

    std::string out = "S,A,Y";
    if (any_z) out += ",Z";
    if (data.membership_probs) out += ",prob";
    for (const auto& name : d.covariate_names) {
        out += ',';
        out += name;
    }
    out += '\n';

    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const auto& r = d.rows[i];
        out += label_text(r.sample);
        out += ',';
        out += std::to_string(r.treatment);
        out += ',';
        out += format_double(r.y_reported);
        if (any_z) {
            out += ',';
            if (r.z_true) out += format_double(*r.z_true);
        }
        if (data.membership_probs) {
            out += ',';
            out += format_double((*data.membership_probs)[i]);
        }
        for (double x : r.covariates) {
            out += ',';
            out += format_double(x);
        }
        out += '\n';
    }
    return out;
}

void write_stacked_csv(const std::string& path, const StackedCsv& data) {
    write_file(path, write_stacked_csv_text(data));
}

TermSet parse_terms(const std::string& grammar, int covariate_count) {
    TermSet terms;
    terms.include_intercept = true;

    auto parse_index = [&](std::string_view token) {
        if (token.size() < 2 || (token[0] != 'x' && token[0] != 'X'))
            raise(ErrorCode::InvalidConfig, "bad term token '" + std::string(token) + "'");
        int idx = 0;
        const auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), idx);
        if (ec != std::errc{} || ptr != token.data() + token.size() || idx < 1)
            raise(ErrorCode::InvalidConfig, "bad covariate index in '" + std::string(token) + "'");
        if (idx > covariate_count)
            raise(ErrorCode::InvalidConfig, "term '" + std::string(token) + "' exceeds the " +
                                                std::to_string(covariate_count) +
                                                " covariate columns");
        return idx - 1;
    };

    std::string_view rest = grammar;
    while (!rest.empty()) {
        std::size_t plus = rest.find('+');
        std::string_view token = rest.substr(0, plus);
        rest = plus == std::string_view::npos ? std::string_view{} : rest.substr(plus + 1);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (token.empty()) raise(ErrorCode::InvalidConfig, "empty term in grammar");

        if (const std::size_t colon = token.find(':'); colon != std::string_view::npos) {
            const int a = parse_index(token.substr(0, colon));
            const int b = parse_index(token.substr(colon + 1));
            terms.interactions.emplace_back(a, b);
        } else if (const std::size_t caret = token.find('^'); caret != std::string_view::npos) {
            if (token.substr(caret + 1) != "2")
                raise(ErrorCode::InvalidConfig, "only squared terms are supported: '" +
                                                    std::string(token) + "'");
            terms.quadratics.push_back(parse_index(token.substr(0, caret)));
        } else {
            terms.main_effects.push_back(parse_index(token));
        }
    }
    terms.validate(covariate_count);
    return terms;
}

std::vector<std::pair<double, double>> parse_two_columns(const std::string& path,
                                                         const std::string& first,
                                                         const std::string& second) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty()) raise(ErrorCode::MissingColumn, "empty file; header row required");
    const auto header = split_line(lines[0]);
    int c1 = -1, c2 = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == first) c1 = static_cast<int>(c);
        if (header[c] == second) c2 = static_cast<int>(c);
    }
    if (c1 < 0) raise(ErrorCode::MissingColumn, "column " + first + " not found");
    if (c2 < 0) raise(ErrorCode::MissingColumn, "column " + second + " not found");

    std::vector<std::pair<double, double>> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_line(lines[li]);
        if (fields.size() != header.size())
            raise(ErrorCode::NonNumeric, "line " + std::to_string(li + 1) + ": field count mismatch");
        out.emplace_back(parse_number(fields[static_cast<std::size_t>(c1)], li + 1, first),
                         parse_number(fields[static_cast<std::size_t>(c2)], li + 1, second));
    }
    return out;
}

} // namespace xme
