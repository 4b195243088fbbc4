#include "stcsense/error.hpp"

namespace stcsense {

void throw_domain(const std::string& msg) { throw DomainError(msg); }

void throw_config(const std::string& key, const std::string& msg) { throw ConfigError(msg, key); }

}  // namespace stcsense
