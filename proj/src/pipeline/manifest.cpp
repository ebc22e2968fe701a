#include "prometheus/pipeline/manifest.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <fstream>
#include <memory>

#include "prometheus/core/error.hpp"
#include "prometheus/core/prth.hpp"
#include "prometheus/nn/checkpoint.hpp"

namespace prometheus::pipeline {

namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  return h.hex();
}

void write_manifest(const fs::path& run_dir, const fs::path& stage_dir, const Manifest& m) {
  auto entries = [&](const std::vector<fs::path>& paths) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& p : paths) {
      list.push_back({{"path", fs::relative(p, run_dir).generic_string()}, {"sha256", sha256_file(p)}});
    }
    return list;
  };
  nlohmann::ordered_json j;
  j["stage"] = m.stage;
  if (!m.fold.empty()) j["fold"] = m.fold;
  j["versions"] = {{"prometheus", kToolVersion},
                   {"checkpoint", nn::kCheckpointVersion},
                   {"prth", kPrthVersion}};
  j["config_sha256"] = m.config_sha256;
  j["seeds"] = m.seeds;
  j["inputs"] = entries(m.inputs);
  j["outputs"] = entries(m.outputs);
  std::ofstream os(stage_dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (stage_dir / "manifest.json").string());
  os << j.dump(2) << '\n';
}

RunLock::RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
  fs::create_directories(run_dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw IoError("run directory " + run_dir.string() + " is locked by another invocation (" +
                  path_.string() + ")");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace prometheus::pipeline
