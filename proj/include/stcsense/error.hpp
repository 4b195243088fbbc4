#pragma once

#include <stdexcept>
#include <string>

namespace stcsense {

// Input outside an operation's mathematical domain (r = 0, slot index out of range, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Invalid or inconsistent configuration. `key` names the offending field when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string key = {})
        : std::runtime_error(key.empty() ? msg : key + ": " + msg), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// Failure inside a pipeline stage; `stage` is reported in partial results.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& msg)
        : std::runtime_error(stage + ": " + msg), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

[[noreturn]] void throw_domain(const std::string& msg);
[[noreturn]] void throw_config(const std::string& key, const std::string& msg);

inline void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw_config(key, msg);
}

}  // namespace stcsense
