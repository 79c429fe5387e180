#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include "support/cli.hpp"
#include "twinpose/commands.hpp"
#include "twinpose/service.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace twinpose;
namespace fs = std::filesystem;

namespace {

class Running {
 public:
  explicit Running(ServiceConfig config) : service_(std::move(config)) {
    port_ = service_.bind_any_port();
    thread_ = std::thread([this] { service_.listen(); });
    service_.wait_until_ready();
  }
  ~Running() {
    service_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  Service& service() { return service_; }
  int port() const { return port_; }

 private:
  Service service_;
  int port_ = 0;
  std::thread thread_;
};

ServiceConfig config_for(const fs::path& root, bool read_only = false) {
  ServiceConfig c;
  c.dataset_root = root;
  c.read_only = read_only;
  return c;
}

Json frame_json(const fs::path& root, const std::string& id) {
  return Json::parse(oracle::read_file(root / "frames" / (id + ".json")));
}

}  // namespace

TEST(Config, Validation) {
  ServiceConfig c = config_for(TWINPOSE_FIXTURES "/dataset");
  EXPECT_NO_THROW(c.validate());
  c.port = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.port = 65536;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.port = 65535;
  c.dataset_root = TWINPOSE_FIXTURES "/nowhere";
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, PortPrecedence) {
  unsetenv("TWINPOSE_PORT");
  EXPECT_EQ(resolve_port(std::nullopt), kDefaultPort);
  EXPECT_EQ(kDefaultPort, 8753);
  setenv("TWINPOSE_PORT", "9100", 1);
  EXPECT_EQ(resolve_port(std::nullopt), 9100);
  EXPECT_EQ(resolve_port(9200), 9200);
  setenv("TWINPOSE_PORT", "91x", 1);
  EXPECT_THROW(resolve_port(std::nullopt), std::invalid_argument);
  EXPECT_EQ(resolve_port(9200), 9200);
  unsetenv("TWINPOSE_PORT");
}

TEST(Http, ScenesAndModels) {
  Running s(config_for(TWINPOSE_FIXTURES "/dataset"));
  auto c = s.client();
  auto r = c.Get("/scenes");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(Json::parse(r->body)["scenes"], Json::array({"000001", "000002"}));

  r = c.Get("/scenes/000002");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const Json scene = Json::parse(r->body);
  EXPECT_EQ(scene["image_url"], "/images/000002.png");
  EXPECT_EQ(annotations_from_json(scene["annotation"]).objects.size(),
            read_annotations(TWINPOSE_FIXTURES "/dataset/frames/000002.json").objects.size());

  r = c.Get("/scenes/999999");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);

  r = c.Get("/models");
  ASSERT_TRUE(r);
  EXPECT_EQ(Json::parse(r->body)["models"].size(), 2u);

  r = c.Get("/models/ped/wireframe");
  ASSERT_TRUE(r);
  const Json w = Json::parse(r->body);
  EXPECT_EQ(w["vertices"].size(), 8u);
  EXPECT_EQ(w["edges"].size(), 18u);
  EXPECT_NEAR(w["vertices"][0][1].get<double>(), -0.9, 1e-12);
  EXPECT_EQ(c.Get("/models/truck/wireframe")->status, 404);

  r = c.Get("/images/000001.png");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, oracle::read_file(TWINPOSE_FIXTURES "/dataset/images/000001.png"));
}

TEST(Http, ProjectMatchesCli) {
  Running s(config_for(TWINPOSE_FIXTURES "/dataset"));
  const Json frame = frame_json(TWINPOSE_FIXTURES "/dataset", "000001");
  const cli::Run cli_out = cli::run("project " + cli::quote(TWINPOSE_FIXTURES "/dataset/frames/000001.json"));
  ASSERT_EQ(cli_out.code, 0);
  for (std::size_t i = 0; i < frame["objects"].size(); ++i) {
    const Json& o = frame["objects"][i];
    const Json body = {{"model_id", o["model_id"]},
                       {"camera", frame["camera"]},
                       {"pose", {{"translation", o["translation"]}, {"rotation_euler", o["rotation_euler"]}}}};
    auto r = s.client().Post("/project", body.dump(), "application/json");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    // Byte-identical to the CLI's projection of the same object.
    EXPECT_NE(cli_out.out.find("\"projection\":" + r->body), std::string::npos) << r->body;
  }
}

TEST(Http, ProjectRejectsBadRequests) {
  Running s(config_for(TWINPOSE_FIXTURES "/dataset"));
  auto c = s.client();
  auto r = c.Post("/project", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  r = c.Post("/project", R"({"model_id":"car"})", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_NE(Json::parse(r->body)["error"].get<std::string>().find("camera"), std::string::npos);
  const Json unknown = {{"model_id", "truck"},
                        {"camera", {{"f", 700.0}, {"cx", 300.0}, {"cy", 200.0}, {"width", 600}, {"height", 400}}},
                        {"pose", {{"translation", {0, 0, 5}}, {"rotation_euler", {0, 0, 0}}}}};
  EXPECT_EQ(c.Post("/project", unknown.dump(), "application/json")->status, 400);
}

TEST(Http, PutThenGetRoundTrip) {
  const fs::path dir = cli::copy_fixtures("service_put");
  Running s(config_for(dir / "dataset"));
  auto c = s.client();
  Json frame = frame_json(dir / "dataset", "000001");
  frame["objects"][0]["translation"] = {2.123456789012, 1.5000000001, 15.3333333333333};
  frame["objects"][0]["rotation_euler"] = {0.0, 0.312345678912345, -1e-10};
  auto r = c.Put("/scenes/000001/annotations", frame.dump(), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(Json::parse(r->body)["saved"], true);

  r = c.Get("/scenes/000001");
  const AnnotationSet got = annotations_from_json(Json::parse(r->body)["annotation"]);
  const AnnotationSet sent = annotations_from_json(frame);
  EXPECT_LT((got.objects[0].translation - sent.objects[0].translation).norm(), 1e-9);
  EXPECT_NEAR(got.objects[0].rotation.ry, sent.objects[0].rotation.ry, 1e-9);
  EXPECT_NEAR(got.objects[0].rotation.rz, sent.objects[0].rotation.rz, 1e-12);

  const AnnotationSet on_disk = read_annotations(dir / "dataset" / "frames" / "000001.json");
  EXPECT_LT((on_disk.objects[0].translation - sent.objects[0].translation).norm(), 1e-9);
  EXPECT_EQ(s.service().snapshot("000001")->objects[0].translation, on_disk.objects[0].translation);
}

TEST(Http, PutValidation) {
  const fs::path dir = cli::copy_fixtures("service_put_bad");
  Running s(config_for(dir / "dataset"));
  auto c = s.client();
  const std::string before = oracle::read_file(dir / "dataset" / "frames" / "000001.json");

  EXPECT_EQ(c.Put("/scenes/000001/annotations", "[1,", "application/json")->status, 400);
  Json frame = frame_json(dir / "dataset", "000001");
  frame["objects"][1].erase("translation");
  auto r = c.Put("/scenes/000001/annotations", frame.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_NE(r->body.find("/objects/1/translation"), std::string::npos) << r->body;

  frame = frame_json(dir / "dataset", "000001");
  frame["objects"][0]["model_id"] = "truck";
  EXPECT_EQ(c.Put("/scenes/000001/annotations", frame.dump(), "application/json")->status, 400);
  frame["objects"][0]["model_id"] = "car";
  frame["version"] = 7;
  EXPECT_EQ(c.Put("/scenes/000001/annotations", frame.dump(), "application/json")->status, 400);
  EXPECT_EQ(c.Put("/scenes/424242/annotations", frame_json(dir / "dataset", "000001").dump(), "application/json")->status,
            404);

  EXPECT_EQ(oracle::read_file(dir / "dataset" / "frames" / "000001.json"), before);
}

TEST(Http, ReadOnlyRejectsWrites) {
  const fs::path dir = cli::copy_fixtures("service_readonly");
  Running s(config_for(dir / "dataset", true));
  const std::string before = oracle::read_file(dir / "dataset" / "frames" / "000001.json");
  auto r = s.client().Put("/scenes/000001/annotations", frame_json(dir / "dataset", "000001").dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 403);
  EXPECT_EQ(oracle::read_file(dir / "dataset" / "frames" / "000001.json"), before);
  EXPECT_EQ(s.client().Get("/scenes")->status, 200);
}

TEST(Http, ConcurrentWritesLeaveOneConsistentFile) {
  const fs::path dir = cli::copy_fixtures("service_concurrent");
  Running s(config_for(dir / "dataset"));
  const Json base = frame_json(dir / "dataset", "000002");
  std::vector<std::thread> writers;
  for (int w = 0; w < 8; ++w) {
    writers.emplace_back([&, w] {
      Json f = base;
      f["objects"][0]["translation"][0] = 0.125 * w;
      auto c = s.client();
      for (int k = 0; k < 5; ++k) c.Put("/scenes/000002/annotations", f.dump(), "application/json");
    });
  }
  for (auto& t : writers) t.join();
  const AnnotationSet disk = read_annotations(dir / "dataset" / "frames" / "000002.json");
  EXPECT_EQ(disk.objects[0].translation, s.service().snapshot("000002")->objects[0].translation);
  const double x = disk.objects[0].translation.x();
  EXPECT_EQ(std::round(x / 0.125) * 0.125, x);
}

TEST(Http, SolveRecoversPose) {
  Running s(config_for(TWINPOSE_FIXTURES "/dataset"));
  const CameraIntrinsics k{721.5377, 609.5593, 172.854, 1242, 375};
  const RigidPose truth{{-3.0, 1.2, 8.0}, {0.1, -0.6, 0.05}};
  const TriMesh ped = oracle::unit_cube().scaled({0.6, 1.8, 0.6});
  Json corr = Json::array();
  for (const auto& v : ped.vertices) {
    const Pixel px = project_point(k, truth.apply(v));
    corr.push_back({{"object_point", {v.x(), v.y(), v.z()}}, {"image_point", {px.u, px.v}}});
  }
  Json body = {{"model_id", "ped"},
               {"camera", {{"f", k.f}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
               {"init", {{"translation", {-2.5, 1.0, 9.0}}, {"rotation_euler", {0.0, -0.3, 0.0}}}},
               {"correspondences", corr}};
  auto r = s.client().Post("/solve", body.dump(), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const Json j = Json::parse(r->body);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(j["pose"]["translation"][i].get<double>(), truth.translation[i], 1e-5);
  EXPECT_NEAR(j["pose"]["rotation_euler"][1].get<double>(), -0.6, 1e-5);

  body["correspondences"] = Json::array({corr[0], corr[1]});
  r = s.client().Post("/solve", body.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
}

TEST(Http, BusyPort) {
  Running first(config_for(TWINPOSE_FIXTURES "/dataset"));
  ServiceConfig c = config_for(TWINPOSE_FIXTURES "/dataset");
  c.port = first.port();
  Service second(c);
  EXPECT_FALSE(second.bind());
  const cli::Run r =
      cli::run("serve --dataset " + cli::quote(TWINPOSE_FIXTURES "/dataset") + " --port " + std::to_string(first.port()),
               "timeout 20");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("busy"), std::string::npos) << r.err;
}
