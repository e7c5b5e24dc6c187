#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scenediff/pipeline.hpp"
#include "scenediff/synth.hpp"

using namespace scenediff;

namespace {

PipelineInput input_of(const synth::SyntheticScene& scene)
{
  PipelineInput in;
  in.reference = scene.reference;
  in.rescan = scene.rescan;
  in.poses = scene.poses;
  in.truth = GroundTruthData{scene.truth.changed_points(), scene.truth.transforms};
  return in;
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_SUITE("pipeline")
{
  TEST_CASE("config parsing")
  {
    std::istringstream text("# comment\n"
                            "mode = \"before-optim\"\n"
                            "tau = 0.08\n"
                            "[ransac]\n"
                            "k = 3\n"
                            "[energy]\n"
                            "lambda = 1.5\n");
    const PipelineConfig c = parse_config(text);
    CHECK(c.mode == Mode::BeforeOptim);
    CHECK(c.tau == 0.08);
    CHECK(c.ransac.k == 3);
    CHECK(c.energy.lambda == 1.5);
    CHECK(c.prior_radius == 0.05);

    std::istringstream unknown("tau = 0.1\nbogus = 2\n");
    try {
      parse_config(unknown);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    std::istringstream malformed("tau = fast\n");
    CHECK_THROWS_AS(parse_config(malformed), ParseError);
    CHECK_THROWS_AS(parse_mode("quick"), SpecViolation);
    CHECK(parse_mode(to_string(Mode::TanejaBaseline)) == Mode::TanejaBaseline);

    PipelineConfig bad;
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), SpecViolation);
  }

  TEST_CASE("a static scene yields no objects")
  {
    const auto scene = synth::generate(synth::preset_static());
    PipelineInput in = input_of(scene);
    in.truth.reset();
    const RunReport r = run(in, PipelineConfig{});
    CHECK(r.objects.empty());
    CHECK(r.hypotheses.empty());
    const auto doc = report_json(r);
    CHECK(doc["objects"].is_array());
    CHECK(doc["objects"].empty());
    CHECK(doc["eval"].is_null());
  }

  TEST_CASE("missing poses fail in a named stage")
  {
    const auto scene = synth::generate(synth::preset_static());
    PipelineInput in = input_of(scene);
    in.poses.clear();
    try {
      run(in, PipelineConfig{});
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "input");
    }
  }

  TEST_CASE("optimization only adds recall on a moved box")
  {
    const auto scene = synth::generate(synth::preset_single_move());
    const PipelineInput in = input_of(scene);
    PipelineConfig before;
    before.mode = Mode::BeforeOptim;
    const RunReport a = run(in, before);
    const RunReport b = run(in, PipelineConfig{});
    REQUIRE(a.eval);
    REQUIRE(b.eval);
    CHECK(a.hypotheses.empty());
    CHECK(b.eval->voxel_recall >= a.eval->voxel_recall);
    CHECK(b.hypotheses.size() == 1);
    for (const auto& o : b.objects)
      if (o.transform_id)
        CHECK(*o.transform_id < static_cast<int>(b.hypotheses.size()));
  }

  TEST_CASE("reports are byte-identical across runs and read back")
  {
    const auto scene = synth::generate(synth::preset_single_move());
    const PipelineInput in = input_of(scene);
    const auto dir = std::filesystem::temp_directory_path() / "scenediff_pipeline_test";
    std::filesystem::remove_all(dir);
    RunOptions opts;
    opts.out_dir = dir / "a";
    const RunReport a = run(in, PipelineConfig{}, opts);
    opts.out_dir = dir / "b";
    run(in, PipelineConfig{}, opts);
    const std::string ja = slurp(dir / "a" / "report.json");
    CHECK_FALSE(ja.empty());
    CHECK(ja == slurp(dir / "b" / "report.json"));
    CHECK(std::filesystem::exists(dir / "a" / "timings.json"));
    CHECK(read_report(dir / "a" / "report.json") == report_json(a));
    std::filesystem::remove_all(dir);
  }
}
