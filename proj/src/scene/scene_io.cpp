#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jrt/error.hpp"
#include "jrt/scene.hpp"

namespace jrt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& path, const std::string& what) {
  throw FormatError(origin + ": " + path + ": " + what);
}

const json& require(const json& doc, const char* key, const std::string& origin) {
  auto it = doc.find(key);
  if (it == doc.end()) fail(origin, key, "missing key");
  return *it;
}

std::size_t positive_int(const json& v, const std::string& path, const std::string& origin) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) fail(origin, path, "expected a positive integer");
  return v.get<std::size_t>();
}

const json& array_of(const json& v, std::size_t expected, const std::string& path,
                     const std::string& origin) {
  if (!v.is_array()) fail(origin, path, "expected an array");
  if (expected != 0 && v.size() != expected) {
    fail(origin, path,
         "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

}  // namespace

SceneSequence parse_scene(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) fail(origin, "$", "expected an object");

  const std::size_t N = positive_int(require(doc, "persons", origin), "persons", origin);
  const std::size_t J = positive_int(require(doc, "joints", origin), "joints", origin);
  const json& fps_v = require(doc, "fps", origin);
  if (!fps_v.is_number() || !std::isfinite(fps_v.get<double>()) || fps_v.get<double>() <= 0) {
    fail(origin, "fps", "expected a positive finite number");
  }

  Skeleton skel;
  skel.joints = J;
  const json& bones = array_of(require(doc, "bones", origin), 0, "bones", origin);
  for (std::size_t b = 0; b < bones.size(); ++b) {
    const std::string path = "bones[" + std::to_string(b) + "]";
    const json& pair = array_of(bones[b], 2, path, origin);
    for (std::size_t k = 0; k < 2; ++k) {
      if (!pair[k].is_number_integer() || pair[k].get<long long>() < 0) {
        fail(origin, path + "[" + std::to_string(k) + "]", "expected a joint index");
      }
    }
    skel.bones.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
  }
  try {
    skel.validate();
  } catch (const InvalidArgument& e) {
    fail(origin, "bones", e.what());
  }

  const json& pos = array_of(require(doc, "positions", origin), 0, "positions", origin);
  const std::size_t T = pos.size();
  if (T < 2) fail(origin, "positions", "need at least 2 frames");
  std::vector<double> data;
  data.reserve(T * N * J * 3);
  for (std::size_t t = 0; t < T; ++t) {
    const std::string pt = "positions[" + std::to_string(t) + "]";
    const json& frame = array_of(pos[t], N, pt, origin);
    for (std::size_t n = 0; n < N; ++n) {
      const std::string pn = pt + "[" + std::to_string(n) + "]";
      const json& person = array_of(frame[n], J, pn, origin);
      for (std::size_t j = 0; j < J; ++j) {
        const std::string pj = pn + "[" + std::to_string(j) + "]";
        const json& xyz = array_of(person[j], 3, pj, origin);
        for (std::size_t c = 0; c < 3; ++c) {
          if (!xyz[c].is_number()) fail(origin, pj + "[" + std::to_string(c) + "]", "expected a number");
          const double v = xyz[c].get<double>();
          if (!std::isfinite(v)) fail(origin, pj + "[" + std::to_string(c) + "]", "non-finite number");
          data.push_back(v);
        }
      }
    }
  }
  return SceneSequence(std::move(skel), N, fps_v.get<double>(),
                       Tensor<double>({T, N, J, 3}, std::move(data)));
}

SceneSequence read_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open scene file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), path.string());
}

std::string serialize_scene(const SceneSequence& scene) {
  json doc;
  doc["persons"] = scene.persons();
  doc["joints"] = scene.joints();
  doc["fps"] = scene.fps();
  json bones = json::array();
  for (auto [a, b] : scene.skeleton().bones) bones.push_back({a, b});
  doc["bones"] = std::move(bones);
  json pos = json::array();
  for (std::size_t t = 0; t < scene.frames(); ++t) {
    json frame = json::array();
    for (std::size_t n = 0; n < scene.persons(); ++n) {
      json person = json::array();
      for (std::size_t j = 0; j < scene.joints(); ++j) {
        person.push_back({scene.at(t, n, j, 0), scene.at(t, n, j, 1), scene.at(t, n, j, 2)});
      }
      frame.push_back(std::move(person));
    }
    pos.push_back(std::move(frame));
  }
  doc["positions"] = std::move(pos);
  return doc.dump();
}

void write_scene(const std::filesystem::path& path, const SceneSequence& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << serialize_scene(scene) << '\n';
}

}  // namespace jrt
