//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/checkpoint.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "megan/error.h"

namespace megan {

namespace fs = std::filesystem;

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path &path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_bundle(const fs::path &dir, const Bundle &b,
                  std::string_view best_params) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw DataError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / kModelFile, model_config_to_text(b.model, b.hash));
  write_file(dir / kVocabFile, vocab_to_text(b.vocab, b.hash));
  write_file(dir / kFeaturesFile, feature_config_to_text(b.features, b.hash));
  write_file(dir / kRunConfigFile,
             "# megan-run-config\t1\t" + b.hash + "\n" + b.run_config);
  if (b.state)
    write_file(dir / kTrainStateFile, train_state_to_text(*b.state, b.hash));
  if (!best_params.empty())
    write_file(dir / kBestParamsFile, best_params);
  // Written last: its presence marks a complete bundle.
  write_file(dir / kParamsFile, params_to_bytes(b.params));
}

bool has_bundle(const fs::path &dir) {
  return fs::exists(dir / kParamsFile) && fs::exists(dir / kModelFile)
         && fs::exists(dir / kVocabFile) && fs::exists(dir / kFeaturesFile);
}

Bundle read_bundle(const fs::path &dir, bool best) {
  if (!has_bundle(dir))
    throw DataError("no complete checkpoint in " + dir.string());
  Bundle b;
  b.model = model_config_from_text(read_file(dir / kModelFile));
  b.vocab = vocab_from_text(read_file(dir / kVocabFile));
  b.features = feature_config_from_text(read_file(dir / kFeaturesFile));
  const fs::path params = best && fs::exists(dir / kBestParamsFile)
                              ? dir / kBestParamsFile
                              : dir / kParamsFile;
  b.params = params_from_bytes(read_file(params));
  if (fs::exists(dir / kTrainStateFile))
    b.state = train_state_from_text(read_file(dir / kTrainStateFile));
  if (fs::exists(dir / kRunConfigFile)) {
    std::string text = read_file(dir / kRunConfigFile);
    const std::size_t nl = text.find('\n');
    const std::string head = text.substr(0, nl);
    const std::size_t tab = head.rfind('\t');
    if (tab != std::string::npos)
      b.hash = head.substr(tab + 1);
    b.run_config = nl == std::string::npos ? "" : text.substr(nl + 1);
  }
  if (b.model.atom_actions != static_cast<int>(b.vocab.atom_actions().size())
      || b.model.bond_actions
             != static_cast<int>(b.vocab.bond_actions().size())
      || b.model.atom_features != b.features.atom_width()
      || b.model.bond_features != b.features.bond_width())
    throw DataError("checkpoint files disagree on vocabulary or feature sizes");
  try {
    const ParamStore fresh = init_params(b.model, 0);
    if (fresh.size() != b.params.size())
      throw DataError("checkpoint parameters do not match the model config");
    for (int i = 0; i < fresh.size(); ++i) {
      const Param &p = b.params.get(fresh.at(i).name);
      if (p.value.shape() != fresh.at(i).value.shape())
        throw DataError("checkpoint parameter " + p.name + " has shape "
                        + shape_string(p.value));
    }
  }
  catch (const ConfigError &e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return b;
}

DirLock::DirLock(const fs::path &dir) : path_(dir / kLockFile) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    const int err = errno;
    throw DataError(err == EEXIST
                        ? dir.string() + " is locked by another writer ("
                              + path_.string() + " exists)"
                        : "cannot lock " + dir.string() + ": "
                              + std::strerror(err));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirLock::~DirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace megan
