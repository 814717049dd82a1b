#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "chaintrace/errors.hpp"
#include "chaintrace/kbloom.hpp"

namespace chaintrace::kbloom {
namespace {

const EVP_MD* digest_for(std::string_view hash_name) {
  if (hash_name == "HMAC-SHA256") return EVP_sha256();
  if (hash_name == "HMAC-SHA512") return EVP_sha512();
  if (hash_name == "HMAC-SHA384") return EVP_sha384();
  if (hash_name == "HMAC-SHA224") return EVP_sha224();
  throw ParameterError("unsupported keyed hash: " + std::string(hash_name));
}

}  // namespace

Bytes hmac(std::string_view hash_name, ByteView key, ByteView data) {
  const EVP_MD* md = digest_for(hash_name);
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  const auto* result = HMAC(md, key.data(), static_cast<int>(key.size()), data.data(), data.size(),
                            out.data(), &len);
  if (result == nullptr) throw ParameterError("HMAC computation failed");
  out.resize(len);
  return out;
}

std::size_t bit_index(std::string_view hash_name, ByteView key, ByteView element, std::size_t m) {
  const Bytes mac = hmac(hash_name, key, element);
  std::uint64_t prefix = 0;
  for (std::size_t i = 0; i < 8; ++i) prefix = (prefix << 8) | mac[i];
  return static_cast<std::size_t>(prefix % m);
}

}  // namespace chaintrace::kbloom
