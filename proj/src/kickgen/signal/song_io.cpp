#include "kickgen/signal/song_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "kickgen/common/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kickgen::signal {

namespace {

constexpr const char* kSongFormat = "kickgen-song-v1";
constexpr const char* kCorpusFormat = "kickgen-corpus-v1";
constexpr std::size_t kTotalChannels = 5;  // kick + 4 context channels

void write_f32(std::ofstream& out, const std::vector<double>& values) {
  for (double v : values) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
}

json corpus_config_to_json(const CorpusConfig& c) {
  return json{{"n_songs", c.n_songs},
              {"bars", c.bars},
              {"tempo_min", c.tempo_min},
              {"tempo_max", c.tempo_max},
              {"frame_rate", c.frame_rate},
              {"styles", c.styles},
              {"noise_sigma", c.noise_sigma},
              {"decay_frames", c.decay_frames}};
}

CorpusConfig corpus_config_from_json(const json& j) {
  CorpusConfig c;
  c.n_songs = j.at("n_songs").get<int>();
  c.bars = j.at("bars").get<int>();
  c.tempo_min = j.at("tempo_min").get<double>();
  c.tempo_max = j.at("tempo_max").get<double>();
  c.frame_rate = j.at("frame_rate").get<double>();
  c.styles = j.at("styles").get<std::vector<std::string>>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.decay_frames = j.at("decay_frames").get<int>();
  return c;
}

}  // namespace

void save_song(const std::string& dir, const SongRecord& song) {
  song.validate();
  fs::create_directories(dir);

  json meta;
  meta["format"] = kSongFormat;
  meta["id"] = song.id;
  meta["tempo_bpm"] = song.tempo_bpm;
  meta["frame_rate"] = song.target.frame_rate;
  meta["frames"] = song.length();
  meta["channels"] = kChannelOrder;
  if (!song.onset_times.empty()) meta["onset_times"] = song.onset_times;

  std::ofstream mf(fs::path(dir) / "meta.json");
  if (!mf) throw IoError("cannot write song meta: " + dir);
  mf << meta.dump(2) << "\n";

  std::ofstream cf(fs::path(dir) / "channels.f32", std::ios::binary);
  if (!cf) throw IoError("cannot write song channels: " + dir);
  write_f32(cf, song.target.values);
  for (const auto& ch : song.context.channels) write_f32(cf, ch.values);
  if (!cf) throw IoError("write failed for song channels: " + dir);
}

SongRecord load_song(const std::string& dir) {
  const fs::path meta_path = fs::path(dir) / "meta.json";
  std::ifstream mf(meta_path);
  if (!mf) throw IoError("cannot open song meta: " + meta_path.string());
  json meta;
  try {
    mf >> meta;
  } catch (const json::exception& e) {
    throw FormatError("song meta is not valid JSON: " + std::string(e.what()));
  }
  if (meta.value("format", "") != kSongFormat) {
    throw FormatError("song meta has wrong format tag: " + meta_path.string());
  }

  SongRecord song;
  song.id = meta.at("id").get<std::string>();
  song.tempo_bpm = meta.at("tempo_bpm").get<double>();
  const double frame_rate = meta.at("frame_rate").get<double>();
  const auto frames = meta.at("frames").get<std::size_t>();
  const auto channels = meta.at("channels").get<std::vector<std::string>>();
  if (channels.size() != kTotalChannels ||
      !std::equal(channels.begin(), channels.end(), kChannelOrder.begin(),
                  [](const std::string& a, const char* b) { return a == b; })) {
    throw FormatError("song meta declares unexpected channel order");
  }
  if (meta.contains("onset_times")) {
    song.onset_times = meta.at("onset_times").get<std::vector<double>>();
  }

  const fs::path data_path = fs::path(dir) / "channels.f32";
  std::ifstream cf(data_path, std::ios::binary);
  if (!cf) throw IoError("cannot open song channels: " + data_path.string());
  cf.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(cf.tellg());
  cf.seekg(0);
  if (bytes != kTotalChannels * frames * sizeof(float)) {
    throw FormatError("song payload length does not match declared frames");
  }

  const auto read_channel = [&]() {
    OnsetCurve c;
    c.frame_rate = frame_rate;
    c.values.resize(frames);
    std::vector<float> buf(frames);
    cf.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(frames * sizeof(float)));
    if (!cf) throw FormatError("song payload truncated");
    for (std::size_t i = 0; i < frames; ++i) {
      c.values[i] = static_cast<double>(buf[i]);
    }
    return c;
  };
  song.target = read_channel();
  for (auto& ch : song.context.channels) ch = read_channel();
  song.validate();
  return song;
}

void save_corpus(const std::string& dir, const std::vector<SongRecord>& songs,
                 const std::optional<CorpusManifest>& manifest) {
  fs::create_directories(dir);
  for (const auto& song : songs) {
    save_song((fs::path(dir) / song.id).string(), song);
  }
  if (manifest) {
    json j;
    j["format"] = kCorpusFormat;
    j["seed"] = manifest->seed;
    j["config"] = corpus_config_to_json(manifest->config);
    std::ofstream out(fs::path(dir) / "corpus.json");
    if (!out) throw IoError("cannot write corpus manifest: " + dir);
    out << j.dump(2) << "\n";
  }
}

std::vector<SongRecord> load_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir);
  std::vector<std::string> song_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
      song_dirs.push_back(entry.path().string());
    }
  }
  std::sort(song_dirs.begin(), song_dirs.end());
  if (song_dirs.empty()) throw IoError("corpus directory has no songs: " + dir);
  std::vector<SongRecord> songs;
  songs.reserve(song_dirs.size());
  for (const auto& d : song_dirs) songs.push_back(load_song(d));
  return songs;
}

std::optional<CorpusManifest> load_corpus_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "corpus.json";
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("corpus manifest is not valid JSON: " +
                      std::string(e.what()));
  }
  if (j.value("format", "") != kCorpusFormat) {
    throw FormatError("corpus manifest has wrong format tag");
  }
  CorpusManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = corpus_config_from_json(j.at("config"));
  return m;
}

}  // namespace kickgen::signal
