#include "matforge/core/png_io.hpp"
#include "matforge/service/cli.hpp"
#include "matforge/service/http.hpp"
#include "matforge/service/render_service.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <future>
#include <sstream>
#include <thread>

using namespace matforge;
using namespace matforge::service;
using matforge::testing::TempDir;
using nlohmann::json;

namespace {

neural::Model small_model()
{
    neural::NetworkConfig c;
    c.resolution = 32;
    c.widths = {4, 8, 8};
    c.light_channels = 4;
    c.light_hidden = {8};
    return neural::build_network(c, 3);
}

// Server on an ephemeral port for the lifetime of the fixture.
class HttpServer {
public:
    explicit HttpServer(const RenderService& service)
    {
        install_routes(server_, service);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~HttpServer()
    {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const
    {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string reference_request(int spp, int resolution)
{
    return json{{"engine", "reference"},
                {"material", {{"preset", "red-plastic"}}},
                {"light", {{"azimuth", 30.0}, {"elevation", 40.0}, {"turbidity", 3.0}}},
                {"spp", spp},
                {"resolution", resolution},
                {"seed", 1}}
        .dump();
}

} // namespace

TEST(RenderRequest, DefaultsAndRanges)
{
    const RenderService svc(ServiceConfig{}, std::nullopt);
    const auto r = svc.parse_request("{}");
    EXPECT_EQ(r.engine, Engine::Reference);
    EXPECT_FALSE(r.preset);
    const auto light = r.light();
    EXPECT_NEAR(shading::length(light.sun_dir), 1.0, 1e-12);

    auto field_of = [&](const std::string& body) {
        try {
            svc.parse_request(body);
        } catch (const ServiceError& e) {
            EXPECT_EQ(e.status(), 400);
            return e.field();
        }
        return std::string("accepted");
    };
    EXPECT_EQ(field_of(R"({"light": {"turbidity": 42}})"), "light.turbidity");
    EXPECT_EQ(field_of(R"({"light": {"elevation": 0}})"), "light.elevation");
    EXPECT_EQ(field_of(R"({"light": {"elevation": 90}})"), "accepted");
    EXPECT_EQ(field_of(R"({"light": {"azimuth": "north"}})"), "light.azimuth");
    EXPECT_EQ(field_of(R"({"material": {"roughness": 0.01}})"), "material.roughness");
    EXPECT_EQ(field_of(R"({"material": {"diffuse": [1, 2, 0]}})"), "material.diffuse");
    EXPECT_EQ(field_of(R"({"material": {"preset": "nope"}})"), "material.preset");
    EXPECT_EQ(field_of(R"({"engine": "gpu"})"), "engine");
    EXPECT_EQ(field_of(R"({"spp": 0})"), "spp");
    EXPECT_EQ(field_of(R"({"resolution": 4})"), "resolution");
    EXPECT_EQ(field_of(R"({"seed": -1})"), "seed");
    EXPECT_EQ(field_of("not json"), "");
}

TEST(RenderRequest, AnglesAreDegrees)
{
    const RenderService svc(ServiceConfig{}, std::nullopt);
    const auto sun = svc.parse_request(R"({"light": {"azimuth": 90, "elevation": 30}})").light().sun_dir;
    EXPECT_NEAR(sun.x, std::cos(shading::kPi / 6), 1e-12);
    EXPECT_NEAR(sun.y, 0.5, 1e-12);
    EXPECT_NEAR(sun.z, 0.0, 1e-12);
}

TEST(Cli, InferAnglesAreDegrees)
{
    // Azimuth 90 puts the sun on the image's right, 270 on its left.
    TempDir dir("cli-angles");
    const auto d = (dir / "d").string();
    ASSERT_EQ(cli({"render-gt", "--diffuse", "0.8,0.8,0.8", "--specular", "0.04,0.04,0.04", "--roughness", "0.5",
                   "--azimuth", "90", "--elevation", "20", "--seed", "1", "--spp", "8", "--resolution", "32",
                   "--out", (dir / "r.png").string()})
                  .code,
              0);
    const auto img = read_png(dir / "r.png");
    double left = 0.0, right = 0.0;
    for (int y = 8; y < 24; ++y)
        for (int x = 0; x < 16; ++x) {
            left += img.pixels[(y * 32 + 8 + x / 2) * 3];
            right += img.pixels[(y * 32 + 16 + x / 2) * 3];
        }
    EXPECT_GT(right, 1.2 * left);
}

TEST(RenderService, ReferenceRenderHasRequestedSize)
{
    const RenderService svc(ServiceConfig{}, std::nullopt);
    const auto res = svc.render(svc.parse_request(reference_request(4, 24)));
    const auto img = decode_png(res.png);
    EXPECT_EQ(img.width, 24);
    EXPECT_EQ(img.height, 24);
    EXPECT_EQ(img.channels, 3);
    EXPECT_GT(res.trace_ms, 0.0);
}

TEST(RenderService, NeuralNeedsAModelAndItsResolution)
{
    const RenderService without(ServiceConfig{}, std::nullopt);
    auto req = without.parse_request(R"({"engine": "neural", "resolution": 32})");
    try {
        without.render(req);
        FAIL();
    } catch (const ServiceError& e) {
        EXPECT_EQ(e.status(), 409);
    }
    const RenderService with(ServiceConfig{}, small_model());
    const auto res = with.render(req);
    EXPECT_EQ(decode_png(res.png).width, 32);
    EXPECT_GT(res.inference_ms, 0.0);
    req.resolution = 64;
    try {
        with.render(req);
        FAIL();
    } catch (const ServiceError& e) {
        EXPECT_EQ(e.status(), 400);
        EXPECT_EQ(e.field(), "resolution");
    }
}

TEST(RenderService, ConcurrentRequestsMatchSerialBytes)
{
    const RenderService svc(ServiceConfig{}, small_model());
    const auto ref = svc.parse_request(reference_request(2, 16));
    const auto nn = svc.parse_request(R"({"engine": "neural", "resolution": 32, "material": {"preset": "procedural-2"}})");
    const auto serial_ref = svc.render(ref).png, serial_nn = svc.render(nn).png;
    std::vector<std::future<std::vector<std::uint8_t>>> jobs;
    for (int i = 0; i < 4; ++i) {
        jobs.push_back(std::async(std::launch::async, [&] { return svc.render(ref).png; }));
        jobs.push_back(std::async(std::launch::async, [&] { return svc.render(nn).png; }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        EXPECT_EQ(jobs[i].get(), i % 2 == 0 ? serial_ref : serial_nn);
}

TEST(Http, HealthPresetsAndCors)
{
    const RenderService svc(ServiceConfig{}, std::nullopt);
    HttpServer server(svc);
    auto c = server.client();
    auto health = c.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(health->body, "ok");
    EXPECT_EQ(health->get_header_value("Content-Type"), "text/plain");
    EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

    auto presets = c.Get("/presets");
    ASSERT_TRUE(presets);
    EXPECT_EQ(presets->status, 200);
    EXPECT_EQ(presets->get_header_value("Content-Type"), "application/json");
    const auto j = json::parse(presets->body);
    EXPECT_EQ(j.at("presets").size(), 6u);
    EXPECT_FALSE(j.at("neural").get<bool>());

    auto preflight = c.Options("/render");
    ASSERT_TRUE(preflight);
    EXPECT_EQ(preflight->status, 204);
    EXPECT_NE(preflight->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(Http, ReferenceRenderReturnsDecodablePng)
{
    const RenderService svc(ServiceConfig{}, std::nullopt);
    HttpServer server(svc);
    auto res = server.client().Post("/render", reference_request(16, 64), "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
    const auto j = json::parse(res->body);
    const auto img = decode_png(base64_decode(j.at("image").get<std::string>()));
    EXPECT_EQ(img.width, 64);
    EXPECT_EQ(img.height, 64);
    EXPECT_EQ(img.channels, 3);
    EXPECT_TRUE(j.contains("trace_ms"));
    EXPECT_TRUE(j.contains("preprocess_ms"));
}

TEST(Http, ErrorStatuses)
{
    ServiceConfig cfg;
    cfg.max_spp = 32;
    const RenderService svc(cfg, std::nullopt);
    HttpServer server(svc);
    auto c = server.client();

    auto bad = c.Post("/render", R"({"light": {"turbidity": 42}})", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    EXPECT_NE(bad->body.find("turbidity"), std::string::npos);
    EXPECT_EQ(json::parse(bad->body).at("field"), "light.turbidity");

    auto neural = c.Post("/render", R"({"engine": "neural"})", "application/json");
    ASSERT_TRUE(neural);
    EXPECT_EQ(neural->status, 409);

    auto busy = c.Post("/render", reference_request(64, 16), "application/json");
    ASSERT_TRUE(busy);
    EXPECT_EQ(busy->status, 429);
    EXPECT_EQ(busy->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(Http, NeuralRenderWithModel)
{
    const RenderService svc(ServiceConfig{}, small_model());
    HttpServer server(svc);
    auto res = server.client().Post("/render", R"({"engine": "neural", "resolution": 32})", "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
    const auto j = json::parse(res->body);
    EXPECT_TRUE(j.contains("inference_ms"));
    EXPECT_EQ(decode_png(base64_decode(j.at("image").get<std::string>())).width, 32);
}

TEST(Cli, GenDatasetWritesFiftyEntries)
{
    TempDir dir("cli-gen");
    const auto r = cli({"gen-dataset", "--maps", "10", "--lights", "5", "--seed", "7", "--out", dir.path().string(),
                        "--map-res", "16", "--render-res", "8", "--spp", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = dataset::read_manifest(dir / "manifest.json");
    EXPECT_EQ(m.entries.size(), 50u);
}

TEST(Cli, RenderGtIsByteReproducible)
{
    TempDir dir("cli-gt");
    auto run = [&](const std::string& name) {
        return cli({"render-gt", "--preset", "procedural-1", "--seed", "3", "--spp", "4", "--resolution", "24",
                    "--out", (dir / name).string()});
    };
    ASSERT_EQ(run("a.png").code, 0);
    ASSERT_EQ(run("b.png").code, 0);
    EXPECT_EQ(read_file(dir / "a.png"), read_file(dir / "b.png"));
}

TEST(Cli, ErrorsAreSingleMachineParsableLines)
{
    auto missing = cli({"infer", "--checkpoint", "missing.ck", "--out", "/tmp/x.png"});
    EXPECT_EQ(missing.code, kExitIo);
    EXPECT_EQ(missing.err.rfind("error: io: ", 0), 0u) << missing.err;
    EXPECT_NE(missing.err.find("missing.ck"), std::string::npos);
    EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);

    auto unknown = cli({"render-gt", "--bogus"});
    EXPECT_EQ(unknown.code, kExitUsage);
    EXPECT_EQ(unknown.err.rfind("error: usage: ", 0), 0u) << unknown.err;

    auto no_seed = cli({"gen-dataset", "--maps", "2", "--out", "/tmp/x"});
    EXPECT_EQ(no_seed.code, kExitUsage);
    EXPECT_NE(no_seed.err.find("--seed"), std::string::npos);

    auto range = cli({"render-gt", "--seed", "1", "--out", "/tmp/x.png", "--turbidity", "42"});
    EXPECT_EQ(range.code, kExitUsage);
    EXPECT_NE(range.err.find("turbidity"), std::string::npos);

    auto none = cli({});
    EXPECT_EQ(none.code, kExitUsage);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, TrainInferEvalBenchPipeline)
{
    TempDir dir("cli-pipe");
    const auto data = (dir / "data").string(), model = (dir / "model").string();
    ASSERT_EQ(cli({"gen-dataset", "--maps", "2", "--lights", "2", "--seed", "1", "--out", data, "--map-res", "16",
                   "--render-res", "16", "--spp", "1", "--test-count", "1"})
                  .code,
              0);
    const auto t = cli({"train", "--dataset", data, "--out", model, "--seed", "2", "--epochs", "1", "--batch", "2",
                        "--widths", "4,4,4", "--light-channels", "2"});
    ASSERT_EQ(t.code, 0) << t.err;
    const auto ckpt = model + "/model.mfck";
    const auto inf = cli({"infer", "--checkpoint", ckpt, "--preset", "gold", "--out", (dir / "n.png").string()});
    ASSERT_EQ(inf.code, 0) << inf.err;
    EXPECT_EQ(read_png(dir / "n.png").width, 16);
    const auto ev = cli({"eval", "--checkpoint", ckpt, "--dataset", data, "--out", (dir / "r.json").string(), "--csv",
                         (dir / "r.csv").string(), "--baseline"});
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("psnr="), std::string::npos);
    EXPECT_NE(ev.out.find("baseline_psnr="), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "r.csv"));
    const auto b = cli({"bench", "--checkpoint", ckpt, "--seed", "1", "--repeats", "3", "--spp", "1",
                        "--resolution", "16"});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_NE(b.out.find("neural"), std::string::npos);
    EXPECT_NE(b.out.find("reference"), std::string::npos);
}
