#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "rd/data_model.hpp"
#include "rd/tools.hpp"

namespace rd::tools {

struct RetryPolicy {
    std::chrono::milliseconds timeout{30000};
    /// Retries after the first attempt.
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{250};
    std::chrono::milliseconds max_backoff{8000};
};

/// Bounds the number of in-flight tool calls; shared by every client of a run.
class CallLimiter {
public:
    explicit CallLimiter(std::size_t limit);

    class Slot {
    public:
        explicit Slot(CallLimiter& owner) : owner_(owner) { owner_.acquire(); }
        ~Slot() { owner_.release(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        CallLimiter& owner_;
    };

    std::size_t limit() const { return limit_; }
    /// Highest number of simultaneously held slots so far.
    std::size_t peak() const;

private:
    void acquire();
    void release();

    std::size_t limit_;
    std::size_t in_use_ = 0;
    std::size_t peak_ = 0;
    mutable std::mutex mu_;
    std::condition_variable cv_;
};

struct Endpoint {
    std::string tool;  // name used in errors and logs
    std::string url;   // http://host[:port]/path
    std::map<std::string, std::string> headers;
    std::shared_ptr<CallLimiter> limiter;  // optional
};

struct HttpResponse {
    int status = 0;
    std::string body;
    int attempts = 0;
};

/// POSTs `payload` as JSON. Connection errors, 429 and 5xx are retried with
/// exponential backoff; other 4xx fail immediately. Throws ToolFailure.
HttpResponse http_call(const Endpoint& endpoint, const Json& payload, const RetryPolicy& policy);

/// Same as http_call but parses the body as JSON.
Json http_json(const Endpoint& endpoint, const Json& payload, const RetryPolicy& policy);

// Remote clients. Request and response bodies are small JSON objects:
//   ocr:        {"image": ImageRef}                      -> {"text", "boxes": [{text,x0,y0,x1,y1}]}
//   summarizer: {"prompt", "temperature", "num_samples"} -> {"text"}
//   programmer: {"prompt", "temperature", "num_samples"} -> {"text"}
//   plot2table: {"image": ImageRef}                      -> {"table": [[cell, ...], ...]}
//   verifier:   {"mode": "greedy", "image", "text_input"} -> {"answer"}
//               {"mode": "score", "image", "text_input", "target"} -> {"logprob"}
//   student:    {"image", "question", "num_samples"}    -> {"rationales": [...]}

class HttpOcrClient final : public OcrClient {
public:
    HttpOcrClient(Endpoint endpoint, RetryPolicy policy) : endpoint_(std::move(endpoint)), policy_(policy) {}
    OcrResult recognize(const ImageRef& image) override;

private:
    Endpoint endpoint_;
    RetryPolicy policy_;
};

class HttpSummarizerClient final : public SummarizerClient {
public:
    HttpSummarizerClient(Endpoint endpoint, RetryPolicy policy) : endpoint_(std::move(endpoint)), policy_(policy) {}
    std::string summarize(const SummaryRequest& request) override;

private:
    Endpoint endpoint_;
    RetryPolicy policy_;
};

class HttpProgrammerClient final : public ProgrammerClient {
public:
    HttpProgrammerClient(Endpoint endpoint, RetryPolicy policy) : endpoint_(std::move(endpoint)), policy_(policy) {}
    std::string write_program(const ProgramRequest& request) override;

private:
    Endpoint endpoint_;
    RetryPolicy policy_;
};

class HttpPlotToTableClient final : public PlotToTableClient {
public:
    HttpPlotToTableClient(Endpoint endpoint, RetryPolicy policy) : endpoint_(std::move(endpoint)), policy_(policy) {}
    Table extract_table(const ImageRef& image) override;

private:
    Endpoint endpoint_;
    RetryPolicy policy_;
};

class HttpVerifierClient final : public VerifierClient {
public:
    HttpVerifierClient(Endpoint endpoint, RetryPolicy policy) : endpoint_(std::move(endpoint)), policy_(policy) {}
    std::string greedy_answer(const ImageRef& image, std::string_view question,
                              const std::optional<std::string>& rationale) override;
    double answer_logprob(const ImageRef& image, std::string_view question, std::string_view answer,
                          const std::optional<std::string>& rationale) override;

private:
    Endpoint endpoint_;
    RetryPolicy policy_;
};

class HttpStudentClient final : public StudentRationaleClient {
public:
    HttpStudentClient(Endpoint endpoint, RetryPolicy policy) : endpoint_(std::move(endpoint)), policy_(policy) {}
    std::vector<std::string> sample_rationales(const ImageRef& image, std::string_view question, int n) override;

private:
    Endpoint endpoint_;
    RetryPolicy policy_;
};

}  // namespace rd::tools
