#include "rd/http.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "rd/errors.hpp"

namespace rd::tools {

CallLimiter::CallLimiter(std::size_t limit) : limit_(std::max<std::size_t>(1, limit)) {}

std::size_t CallLimiter::peak() const {
    std::lock_guard lock(mu_);
    return peak_;
}

void CallLimiter::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < limit_; });
    ++in_use_;
    peak_ = std::max(peak_, in_use_);
}

void CallLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --in_use_;
    }
    cv_.notify_one();
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& tool, const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ToolFailure(tool, "endpoint '" + url + "' has no scheme", 0);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpResponse http_call(const Endpoint& endpoint, const Json& payload, const RetryPolicy& policy) {
    const auto [origin, path] = split_url(endpoint.tool, endpoint.url);
    const std::string body = payload.dump();
    httplib::Headers headers(endpoint.headers.begin(), endpoint.headers.end());

    const int max_attempts = std::max(0, policy.max_retries) + 1;
    auto backoff = policy.initial_backoff;
    std::string cause;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        httplib::Result result;
        {
            std::optional<CallLimiter::Slot> slot;
            if (endpoint.limiter) slot.emplace(*endpoint.limiter);
            httplib::Client client(origin);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            result = client.Post(path, headers, body, "application/json");
        }

        if (result && result->status >= 200 && result->status < 300) {
            spdlog::debug("{}: {} succeeded on attempt {}", endpoint.tool, endpoint.url, attempt);
            return HttpResponse{result->status, result->body, attempt};
        }
        if (result) {
            cause = "HTTP " + std::to_string(result->status);
            if (!retryable(result->status)) throw ToolFailure(endpoint.tool, cause, attempt);
        } else {
            cause = httplib::to_string(result.error());
        }
        spdlog::warn("{}: attempt {}/{} failed: {}", endpoint.tool, attempt, max_attempts, cause);
        if (attempt < max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff = std::min(backoff * 2, policy.max_backoff);
        }
    }
    throw ToolFailure(endpoint.tool, cause, max_attempts);
}

Json http_json(const Endpoint& endpoint, const Json& payload, const RetryPolicy& policy) {
    auto response = http_call(endpoint, payload, policy);
    try {
        return Json::parse(response.body);
    } catch (const nlohmann::json::exception& e) {
        throw ToolFailure(endpoint.tool, std::string("response is not JSON: ") + e.what(), response.attempts);
    }
}

namespace {

template <class T>
T field(const Endpoint& endpoint, const Json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ToolFailure(endpoint.tool, std::string("bad response field '") + key + "': " + e.what());
    }
}

Json prompt_payload(std::string prompt) {
    return Json{{"prompt", std::move(prompt)}, {"temperature", kSummarizerTemperature}, {"num_samples", 1}};
}

}  // namespace

OcrResult HttpOcrClient::recognize(const ImageRef& image) {
    const auto j = http_json(endpoint_, Json{{"image", to_json(image)}}, policy_);
    OcrResult out;
    out.full_text = field<std::string>(endpoint_, j, "text");
    if (j.contains("boxes")) {
        for (const auto& b : j.at("boxes")) {
            out.boxes.push_back(OcrBox{field<std::string>(endpoint_, b, "text"), field<std::int64_t>(endpoint_, b, "x0"),
                                       field<std::int64_t>(endpoint_, b, "y0"), field<std::int64_t>(endpoint_, b, "x1"),
                                       field<std::int64_t>(endpoint_, b, "y1")});
        }
    }
    return out;
}

std::string HttpSummarizerClient::summarize(const SummaryRequest& request) {
    const auto prompt = render_prompt(request.prompt, {{"question", std::string(request.question)},
                                                       {"answer", std::string(request.gold_answer)},
                                                       {"ocr", std::string(request.full_ocr)}});
    return field<std::string>(endpoint_, http_json(endpoint_, prompt_payload(prompt), policy_), "text");
}

std::string HttpProgrammerClient::write_program(const ProgramRequest& request) {
    const auto prompt = render_prompt(request.prompt, {{"question", std::string(request.question)},
                                                       {"answer", std::string(request.gold_answer)},
                                                       {"ocr", std::string(request.full_ocr)},
                                                       {"table", table_for_prompt(request.table)}});
    return field<std::string>(endpoint_, http_json(endpoint_, prompt_payload(prompt), policy_), "text");
}

Table HttpPlotToTableClient::extract_table(const ImageRef& image) {
    const auto j = http_json(endpoint_, Json{{"image", to_json(image)}}, policy_);
    try {
        return table_from_json(j.at("table"));
    } catch (const std::exception& e) {
        throw ToolFailure(endpoint_.tool, std::string("bad table: ") + e.what());
    }
}

std::string HttpVerifierClient::greedy_answer(const ImageRef& image, std::string_view question,
                                              const std::optional<std::string>& rationale) {
    const Json payload{{"mode", "greedy"}, {"image", to_json(image)}, {"text_input", verifier_text_input(rationale, question)}};
    return field<std::string>(endpoint_, http_json(endpoint_, payload, policy_), "answer");
}

double HttpVerifierClient::answer_logprob(const ImageRef& image, std::string_view question, std::string_view answer,
                                          const std::optional<std::string>& rationale) {
    const Json payload{{"mode", "score"},
                       {"image", to_json(image)},
                       {"text_input", verifier_text_input(rationale, question)},
                       {"target", std::string(answer)}};
    const double lp = field<double>(endpoint_, http_json(endpoint_, payload, policy_), "logprob");
    if (lp > 0.0) throw ToolFailure(endpoint_.tool, "log-probability " + std::to_string(lp) + " is positive");
    return lp;
}

std::vector<std::string> HttpStudentClient::sample_rationales(const ImageRef& image, std::string_view question,
                                                              int n) {
    const Json payload{{"image", to_json(image)}, {"question", std::string(question)}, {"num_samples", n}};
    auto out = field<std::vector<std::string>>(endpoint_, http_json(endpoint_, payload, policy_), "rationales");
    if (static_cast<int>(out.size()) != n)
        throw ToolFailure(endpoint_.tool, "expected " + std::to_string(n) + " rationales, got " + std::to_string(out.size()));
    return out;
}

}  // namespace rd::tools
