#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rd {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, std::string reason)
        : Error("malformed record at line " + std::to_string(line) + ": " + reason),
          line_(line), reason_(std::move(reason)) {}

    std::size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class InvalidGeometry : public Error {
public:
    using Error::Error;
};

class MissingBoxes : public Error {
public:
    using Error::Error;
};

class MissingBinding : public Error {
public:
    explicit MissingBinding(std::string name)
        : Error("missing template binding: " + name), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class ToolFailure : public Error {
public:
    ToolFailure(std::string tool, std::string cause, int attempts = 1)
        : Error(tool + " failed after " + std::to_string(attempts) + " attempt(s): " + cause),
          tool_(std::move(tool)), cause_(std::move(cause)), attempts_(attempts) {}

    const std::string& tool() const { return tool_; }
    const std::string& cause() const { return cause_; }
    int attempts() const { return attempts_; }

private:
    std::string tool_;
    std::string cause_;
    int attempts_;
};

class MissingRationale : public Error {
public:
    explicit MissingRationale(std::string example_id)
        : Error("missing rationale for example " + example_id), example_id_(std::move(example_id)) {}
    const std::string& example_id() const { return example_id_; }

private:
    std::string example_id_;
};

class FoldLeak : public Error {
public:
    using Error::Error;
};

class SubsetTooSmall : public Error {
public:
    using Error::Error;
};

class AllNone : public Error {
public:
    AllNone() : Error("every hypothesis answers None") {}
};

class StageFailure : public Error {
public:
    StageFailure(std::string stage, std::string cause)
        : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)), cause_(std::move(cause)) {}
    const std::string& stage() const { return stage_; }
    const std::string& cause() const { return cause_; }

private:
    std::string stage_;
    std::string cause_;
};

}  // namespace rd
