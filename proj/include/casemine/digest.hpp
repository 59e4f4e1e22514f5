#ifndef CASEMINE_DIGEST_HPP
#define CASEMINE_DIGEST_HPP

#include <memory>
#include <string>
#include <string_view>

namespace casemine {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First `chars` hex digits of the SHA-256; used for short stable identifiers.
std::string short_hash(std::string_view data, std::size_t chars = 16);

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view data);
  /// Lowercase hex digest; the hasher must not be updated afterwards.
  std::string hex();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace casemine

#endif  // CASEMINE_DIGEST_HPP
