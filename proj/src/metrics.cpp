#include "rd/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>

#include "rd/data_model.hpp"
#include "rd/errors.hpp"

namespace rd::metrics {

namespace {

// Lenient UTF-8 decoder; invalid bytes decode as themselves.
std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
        if (i + len > s.size()) len = 1;
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::optional<double> as_number(std::string_view s) {
    std::string cleaned;
    for (char c : s)
        if (c != '%' && c != ',' && !std::isspace(static_cast<unsigned char>(c))) cleaned.push_back(c);
    if (cleaned.empty()) return std::nullopt;
    if (cleaned.front() == '+') cleaned.erase(cleaned.begin());
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), v);
    if (ec != std::errc() || ptr != cleaned.data() + cleaned.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::string_view to_string(Metric m) { return m == Metric::Anls ? "anls" : "ra"; }

Metric metric_from_string(std::string_view s) {
    if (s == "anls") return Metric::Anls;
    if (s == "ra") return Metric::RelaxedAccuracy;
    throw Error("unknown metric '" + std::string(s) + "' (expected anls or ra)");
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

double anls(std::string_view pred, const std::vector<std::string>& golds, double tau) {
    const auto p = decode_utf8(lower_ascii(trim(pred)));
    double best = 0.0;
    for (const auto& gold : golds) {
        const auto g = decode_utf8(lower_ascii(trim(gold)));
        const double denom = static_cast<double>(std::max({p.size(), g.size(), std::size_t{1}}));
        const double nl = static_cast<double>(levenshtein(p, g)) / denom;
        best = std::max(best, nl < tau ? 1.0 - nl : 0.0);
    }
    return best;
}

int relaxed_accuracy(std::string_view pred, std::string_view gold) {
    const auto p = as_number(pred);
    const auto g = as_number(gold);
    if (p && g) {
        if (*g == 0.0) return *p == 0.0 ? 1 : 0;
        return std::abs(*p - *g) <= 0.05 * std::abs(*g) ? 1 : 0;
    }
    return lower_ascii(trim(pred)) == lower_ascii(trim(gold)) ? 1 : 0;
}

int relaxed_accuracy(std::string_view pred, const std::vector<std::string>& golds) {
    int best = 0;
    for (const auto& g : golds) best = std::max(best, relaxed_accuracy(pred, g));
    return best;
}

MetricReport evaluate(Metric metric, const std::vector<std::string>& predictions,
                      const std::vector<std::vector<std::string>>& golds) {
    if (predictions.size() != golds.size()) throw Error("prediction and gold counts differ");
    MetricReport report;
    report.metric = metric;
    report.per_example.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (golds[i].empty()) throw Error("example " + std::to_string(i) + " has no gold answers");
        report.per_example.push_back(metric == Metric::Anls
                                         ? anls(predictions[i], golds[i])
                                         : static_cast<double>(relaxed_accuracy(predictions[i], golds[i])));
    }
    if (!report.per_example.empty())
        report.mean = std::accumulate(report.per_example.begin(), report.per_example.end(), 0.0) /
                      static_cast<double>(report.per_example.size());
    return report;
}

}  // namespace rd::metrics
