#include "tractflow/util/digest.hpp"

#include <openssl/evp.h>

#include "tractflow/util/table.hpp"

namespace tractflow {

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0f]);
  }
  return out;
}

std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

}  // namespace tractflow
