#include "rd/mock_tools.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "rd/errors.hpp"
#include "rd/hash.hpp"
#include "rd/io.hpp"
#include "rd/program.hpp"
#include "rd/sequence.hpp"

namespace rd::tools {

std::string root_image_id(std::string_view image_id) {
    const auto at = image_id.find("#c");
    return std::string(image_id.substr(0, at));
}

struct MockState {
    Json fixtures;
    std::uint64_t seed;

    const Json* section(const char* name, const std::string& key) const {
        auto s = fixtures.find(name);
        if (s == fixtures.end() || !s->is_object()) return nullptr;
        auto it = s->find(key);
        return it == s->end() ? nullptr : &*it;
    }

    std::string seed_str() const { return std::to_string(seed); }

    OcrResult ocr(const ImageRef& image) const {
        OcrResult out;
        const Json* entry = section("ocr", root_image_id(image.id));
        if (!entry) return out;
        for (const auto& b : entry->value("boxes", Json::array())) {
            OcrBox box{b.at("text").get<std::string>(), b.at("x0").get<std::int64_t>(), b.at("y0").get<std::int64_t>(),
                       b.at("x1").get<std::int64_t>(), b.at("y1").get<std::int64_t>()};
            if (image.crop) {
                const bool vertical = image.crop->axis == Axis::Height;
                const auto lo = vertical ? box.y0 : box.x0;
                const auto hi = vertical ? box.y1 : box.x1;
                if (lo < image.crop->start || hi > image.crop->end) continue;
                auto& a = vertical ? box.y0 : box.x0;
                auto& z = vertical ? box.y1 : box.x1;
                a -= image.crop->start;
                z -= image.crop->start;
            }
            out.boxes.push_back(std::move(box));
        }
        std::stable_sort(out.boxes.begin(), out.boxes.end(), [](const OcrBox& a, const OcrBox& b) {
            return std::pair(a.y0, a.x0) < std::pair(b.y0, b.x0);
        });
        for (const auto& b : out.boxes) {
            if (!out.full_text.empty()) out.full_text += '\n';
            out.full_text += b.text;
        }
        return out;
    }

    const std::string* answer_key(const ImageRef& image) const {
        auto v = fixtures.find("verifier");
        if (v == fixtures.end()) return nullptr;
        auto keys = v->find("answer_key");
        if (keys == v->end()) return nullptr;
        auto it = keys->find(root_image_id(image.id));
        return it == keys->end() ? nullptr : it->get_ptr<const std::string*>();
    }

    const Json* verifier_entry(const char* kind, const std::string& id) const {
        auto v = fixtures.find("verifier");
        if (v == fixtures.end()) return nullptr;
        auto s = v->find(kind);
        if (s == v->end()) return nullptr;
        auto it = s->find(id);
        return it == s->end() ? nullptr : &*it;
    }

    // Does the rationale state or compute the answer?
    static bool supports(const std::string& rationale, const std::string& answer) {
        if (auto program = seq::extract_program(rationale)) {
            try {
                auto p = dsl::parse(*program);
                auto result = dsl::execute(p);
                if (auto rendered = dsl::render(result)) return *rendered == answer;
                return std::get<std::string>(p.args[0]) == answer;
            } catch (const Error&) {
                // fall through to the text check
            }
            const auto table_part = rationale.substr(0, rationale.find(seq::kProgramMarker));
            return table_part.find(answer) != std::string::npos;
        }
        return rationale.find(answer) != std::string::npos;
    }
};

namespace {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);)
        if (!trim(line).empty()) lines.emplace_back(trim(line));
    return lines;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) words.push_back(w);
    return words;
}

std::optional<double> cell_number(std::string_view text) {
    std::string cleaned;
    for (char c : trim(text))
        if (c != ',' && c != '%') cleaned.push_back(c);
    if (cleaned.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), v);
    if (ec != std::errc() || ptr != cleaned.data() + cleaned.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

class MockOcr final : public OcrClient {
public:
    explicit MockOcr(std::shared_ptr<const MockState> s) : s_(std::move(s)) {}
    OcrResult recognize(const ImageRef& image) override { return s_->ocr(image); }

private:
    std::shared_ptr<const MockState> s_;
};

class MockSummarizer final : public SummarizerClient {
public:
    explicit MockSummarizer(std::shared_ptr<const MockState> s) : s_(std::move(s)) {}

    std::string summarize(const SummaryRequest& r) override {
        render_prompt(r.prompt, {{"question", std::string(r.question)},
                                 {"answer", std::string(r.gold_answer)},
                                 {"ocr", std::string(r.full_ocr)}});
        if (const Json* e = s_->section("summarizer", r.image.id)) return e->get<std::string>();

        const auto lines = split_lines(r.full_ocr);
        if (lines.empty()) return "No readable text is relevant to the question.";
        std::vector<std::string> picked;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].find(r.gold_answer) == std::string::npos) continue;
            if (i > 0 && (picked.empty() || picked.back() != lines[i - 1])) picked.push_back(lines[i - 1]);
            picked.push_back(lines[i]);
        }
        if (picked.empty()) {
            const auto h = stable_hash({"summarizer", s_->seed_str(), r.image.id, r.question});
            picked.push_back(lines[h % lines.size()]);
        }
        std::string out;
        for (const auto& p : picked) out += (out.empty() ? "" : " ") + p;
        return out;
    }

private:
    std::shared_ptr<const MockState> s_;
};

class MockProgrammer final : public ProgrammerClient {
public:
    explicit MockProgrammer(std::shared_ptr<const MockState> s) : s_(std::move(s)) {}

    std::string write_program(const ProgramRequest& r) override {
        render_prompt(r.prompt, {{"question", std::string(r.question)},
                                 {"answer", std::string(r.gold_answer)},
                                 {"ocr", std::string(r.full_ocr)},
                                 {"table", table_for_prompt(r.table)}});
        if (const Json* e = s_->section("programmer", r.image.id)) {
            if (e->is_string()) return e->get<std::string>();
            if (e->is_array() && !e->empty())
                return (*e)[std::min<std::size_t>(static_cast<std::size_t>(r.attempt), e->size() - 1)]
                    .get<std::string>();
        }
        return search(r.table, std::string(trim(r.gold_answer)));
    }

private:
    static std::string search(const Table& table, const std::string& gold) {
        std::vector<double> values;
        for (const auto& row : table)
            for (const auto& cell : row)
                if (auto v = cell_number(cell)) values.push_back(*v);

        auto matches = [&](const dsl::Program& p) {
            try {
                auto rendered = dsl::render(dsl::execute(p));
                return rendered && *rendered == gold;
            } catch (const Error&) {
                return false;
            }
        };

        if (gold == "Yes" || gold == "No") {
            for (std::size_t i = 0; i < values.size(); ++i)
                for (std::size_t j = 0; j < values.size(); ++j) {
                    if (i == j) continue;
                    for (auto op : {dsl::Op::Greater, dsl::Op::Less}) {
                        dsl::Program p{op, {values[i], values[j]}};
                        if (matches(p)) return dsl::print(p);
                    }
                }
        } else if (cell_number(gold)) {
            for (auto op : {dsl::Op::Diff, dsl::Op::Sum, dsl::Op::Div, dsl::Op::Mul, dsl::Op::Avg})
                for (std::size_t i = 0; i < values.size(); ++i)
                    for (std::size_t j = 0; j < values.size(); ++j) {
                        if (i == j) continue;
                        dsl::Program p{op, {values[i], values[j]}};
                        if (matches(p)) return dsl::print(p);
                    }
        }
        return dsl::print(dsl::Program{dsl::Op::Find, {gold}});
    }

    std::shared_ptr<const MockState> s_;
};

class MockPlotToTable final : public PlotToTableClient {
public:
    explicit MockPlotToTable(std::shared_ptr<const MockState> s) : s_(std::move(s)) {}

    Table extract_table(const ImageRef& image) override {
        const Json* e = s_->section("plot_to_table", root_image_id(image.id));
        if (!e) return {};
        Table full = table_from_json(*e);
        if (!image.crop || full.empty()) return full;
        const auto visible = s_->ocr(image).full_text;
        Table kept{full.front()};
        for (std::size_t r = 1; r < full.size(); ++r)
            if (!full[r].empty() && visible.find(full[r].front()) != std::string::npos) kept.push_back(full[r]);
        return kept;
    }

private:
    std::shared_ptr<const MockState> s_;
};

class MockVerifier final : public VerifierClient {
public:
    explicit MockVerifier(std::shared_ptr<const MockState> s) : s_(std::move(s)) {}

    std::string greedy_answer(const ImageRef& image, std::string_view question,
                              const std::optional<std::string>& rationale) override {
        if (const Json* forced = s_->verifier_entry("greedy", image.id)) return forced->get<std::string>();
        const std::string* key = s_->answer_key(image);
        if (!key) return "unknown";
        if (rationale) return MockState::supports(*rationale, *key) ? *key : "unknown";
        const auto h = stable_hash({"greedy", s_->seed_str(), image.id, question});
        return unit_interval(h) < 0.5 ? *key : "unknown";
    }

    double answer_logprob(const ImageRef& image, std::string_view question, std::string_view answer,
                          const std::optional<std::string>& rationale) override {
        if (const Json* e = s_->verifier_entry("logprob", image.id))
            return e->at(rationale ? "with" : "without").get<double>();
        const std::string* key = s_->answer_key(image);
        if (!key || trim(answer) != *key) return std::log(0.01);
        const double base =
            0.05 + 0.4 * unit_interval(stable_hash({"base", s_->seed_str(), image.id, question, answer}));
        if (!rationale) return std::log(base);
        if (!MockState::supports(*rationale, *key)) return std::log(base * 0.5);
        const double boost =
            1.2 + 2.0 * unit_interval(stable_hash({"boost", s_->seed_str(), image.id, question, *rationale}));
        return std::log(std::min(0.95, base * boost));
    }

private:
    std::shared_ptr<const MockState> s_;
};

class MockStudent final : public StudentRationaleClient {
public:
    MockStudent(std::shared_ptr<const MockState> s, std::string tag) : s_(std::move(s)), tag_(std::move(tag)) {}

    std::vector<std::string> sample_rationales(const ImageRef& image, std::string_view question, int n) override {
        std::vector<std::string> out;
        const Json* e = s_->section("student", image.id);
        const auto words = split_words(s_->ocr(image).full_text);
        for (int k = 0; k < n; ++k) {
            if (e && e->is_array() && !e->empty()) {
                out.push_back((*e)[static_cast<std::size_t>(k) % e->size()].get<std::string>());
                continue;
            }
            if (words.empty()) {
                out.push_back("no text detected");
                continue;
            }
            const auto h = stable_hash({"student", s_->seed_str(), tag_, image.id, question, std::to_string(k)});
            const std::size_t start = h % words.size();
            std::string r;
            for (std::size_t i = start; i < std::min(words.size(), start + 16); ++i) r += (r.empty() ? "" : " ") + words[i];
            out.push_back(std::move(r));
        }
        return out;
    }

private:
    std::shared_ptr<const MockState> s_;
    std::string tag_;
};

}  // namespace

MockTools::MockTools(Json fixtures, std::uint64_t seed)
    : state_(std::make_shared<const MockState>(MockState{std::move(fixtures), seed})) {
    if (!state_->fixtures.is_object()) throw Error("mock fixtures must be a JSON object");
}

MockTools MockTools::load(const std::filesystem::path& fixtures_path, std::uint64_t seed) {
    try {
        return MockTools(Json::parse(io::read_file(fixtures_path)), seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error("fixtures " + fixtures_path.string() + ": " + e.what());
    }
}

Toolset MockTools::toolset() const { return Toolset{ocr(), summarizer(), programmer(), plot_to_table(), verifier()}; }
std::shared_ptr<OcrClient> MockTools::ocr() const { return std::make_shared<MockOcr>(state_); }
std::shared_ptr<SummarizerClient> MockTools::summarizer() const { return std::make_shared<MockSummarizer>(state_); }
std::shared_ptr<ProgrammerClient> MockTools::programmer() const { return std::make_shared<MockProgrammer>(state_); }
std::shared_ptr<PlotToTableClient> MockTools::plot_to_table() const { return std::make_shared<MockPlotToTable>(state_); }
std::shared_ptr<VerifierClient> MockTools::verifier() const { return std::make_shared<MockVerifier>(state_); }
std::shared_ptr<StudentRationaleClient> MockTools::student(std::string model_tag) const {
    return std::make_shared<MockStudent>(state_, std::move(model_tag));
}

}  // namespace rd::tools
