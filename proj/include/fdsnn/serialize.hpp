#pragma once

#include "fdsnn/bootstrap.hpp"
#include "fdsnn/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fdsnn {

// Container layout (little-endian):
//   "FDSN" | u16 version | u16 kind | 16-byte params digest | u32 len | params JSON |
//   u64 len | payload | u64 FNV-1a of payload
enum class BlobKind : std::uint16_t { SecretKey = 1, BootstrapKey = 2, Ciphertexts = 3, Scores = 4 };

constexpr std::uint16_t kFormatVersion = 1;

struct BlobHeader {
  std::uint16_t version = kFormatVersion;
  BlobKind kind = BlobKind::Ciphertexts;
  std::string digest;
  FheParams params;
};

std::string kind_name(BlobKind k);

// Any structural problem, checksum failure or digest mismatch raises FormatError.
BlobHeader read_header(const std::string& path);

void save_secret_keys(const std::string& path, const SecretKeySet& sk);
SecretKeySet load_secret_keys(const std::string& path);

void save_bootstrap_key(const std::string& path, const BootstrapKey& bk);
BootstrapKey load_bootstrap_key(const std::string& path);

// kind is Ciphertexts or Scores.
void save_ciphertexts(const std::string& path, const CiphertextTensor& t, const FheParams& params,
                      BlobKind kind = BlobKind::Ciphertexts);
// With expected_digest non-empty, a file bound to other parameters raises FormatError.
CiphertextTensor load_ciphertexts(const std::string& path, FheParams* params = nullptr,
                                  const std::string& expected_digest = {},
                                  BlobKind kind = BlobKind::Ciphertexts);

std::vector<std::uint8_t> encode_blob(BlobKind kind, const FheParams& params, const std::vector<std::uint8_t>& payload);

// FNV-1a 64 of a file, hex.
std::string file_digest(const std::string& path);

}  // namespace fdsnn
