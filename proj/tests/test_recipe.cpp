#include <gtest/gtest.h>

#include <random>
#include <string>

#include "pars/recipe.hpp"
#include "test_util.hpp"

using namespace pars;
using namespace pars::recipe;

namespace {

RecipeDocument reference() { return parse_recipe(test::read_file(test::source_path("tests/data/reference_recipe.txt"))); }

const Layer* layer_named(const RecipeDocument& doc, std::string_view name) {
  for (const auto& l : doc.layers) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

}  // namespace

TEST(Recipe, ReferenceRecipeLayersAndPlqy) {
  const auto doc = reference();
  ASSERT_EQ(doc.layers.size(), 4u);
  EXPECT_EQ(doc.layers[0].role, LayerRole::HIL);
  EXPECT_EQ(doc.layers[1].role, LayerRole::HTL);
  EXPECT_EQ(doc.layers[2].role, LayerRole::EML);
  EXPECT_EQ(doc.layers[3].role, LayerRole::ETL);
  const auto* eml = layer_named(doc, "EML layer");
  ASSERT_NE(eml, nullptr);
  EXPECT_EQ(eml->attributes.number("PLQY_film_fraction"), 0.80);
  EXPECT_EQ(eml->attributes.number("PLQY_solution_fraction"), 0.92);
  EXPECT_EQ(eml->attributes.number("thickness_nm"), 25.0);
}

TEST(Recipe, ReferenceRecipeEnvelopeIsEighty) {
  const auto env = envelope(reference());
  EXPECT_DOUBLE_EQ(env.value_percent, 80.0);
  EXPECT_EQ(env.source, EnvelopeSource::PLQY_FILM);
}

TEST(Recipe, ContinuationLinesAndParenthesesStayTogether) {
  const auto doc = reference();
  EXPECT_EQ(doc.substrate.number("rsheet_ohm_sq"), 15.0);
  EXPECT_EQ(doc.substrate.number("roughness_Rq_nm"), 1.5);
  const auto* hil = layer_named(doc, "HIL layer");
  ASSERT_NE(hil, nullptr);
  // "filtration_um:" ends one physical line and "0.45" starts the next.
  EXPECT_EQ(hil->attributes.number("filtration_um"), 0.45);
  const auto* process = hil->attributes.find("process");
  ASSERT_NE(process, nullptr);
  EXPECT_EQ(std::get<std::string>(*process), "spin (4000 rpm, 60 s -> 8000 rpm, 5 s ramp)");
  // A keyless item mid-line extends the previous value.
  const auto* pretreat = doc.substrate.find("pretreat");
  ASSERT_NE(pretreat, nullptr);
  EXPECT_EQ(std::get<std::string>(*pretreat), "UV-ozone, 10 min; solvent rinse (IPA); 120 C annealing 10");
}

TEST(Recipe, UnparseableLinesKeptUnderSynthesizedKey) {
  const auto doc = reference();
  const auto* etl = layer_named(doc, "ETL layer");
  ASSERT_NE(etl, nullptr);
  bool found = false;
  for (const auto& a : etl->attributes.items()) {
    if (a.key.rfind("_line", 0) == 0 && std::get<std::string>(a.value) == "...") found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Recipe, RawTextIsPreserved) {
  const std::string text = test::read_file(test::source_path("tests/data/reference_recipe.txt"));
  EXPECT_EQ(parse_recipe(text).raw_text, text);
}

TEST(Recipe, EmptyInput) {
  try {
    parse_recipe("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  EXPECT_THROW(parse_recipe("   \n\t\n"), Error);
}

TEST(Recipe, NoLayerBlocksIsMalformed) {
  try {
    parse_recipe("substrate:\n  type: ITO/glass\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedStructure);
  }
}

TEST(Recipe, SingleEmlBlock) {
  const auto doc = parse_recipe("[EML layer]\n  thickness_nm: 20\n");
  ASSERT_EQ(doc.layers.size(), 1u);
  EXPECT_EQ(doc.layers[0].role, LayerRole::EML);
  EXPECT_EQ(doc.layers[0].attributes.size(), 1u);
  EXPECT_EQ(doc.layers[0].attributes.number("thickness_nm"), 20.0);
}

TEST(Recipe, EmlRoleIsCaseInsensitive) {
  const auto doc = parse_recipe("[qd eml]\n  a: 1\n[Htl layer]\n  b: 2\n[cathode]\n  c: 3\n");
  EXPECT_EQ(doc.layers[0].role, LayerRole::EML);
  EXPECT_EQ(doc.layers[1].role, LayerRole::HTL);
  EXPECT_EQ(doc.layers[2].role, LayerRole::OTHER);
}

TEST(Recipe, NoPlqyDefaultsToFullRange) {
  const auto env = envelope(parse_recipe("[EML layer]\n  thickness_nm: 20\n"));
  EXPECT_EQ(env.value_percent, 100.0);
  EXPECT_EQ(env.source, EnvelopeSource::DEFAULT_FULL_RANGE);
}

TEST(Recipe, TwoEmlLayersTakeMax) {
  const auto env = envelope(parse_recipe(
      "[EML layer 1]\n  PLQY_film_fraction: 0.70\n[EML layer 2]\n  PLQY_film_fraction: 0.90\n"));
  EXPECT_DOUBLE_EQ(env.value_percent, 90.0);
  EXPECT_EQ(env.source, EnvelopeSource::PLQY_FILM);
}

TEST(Recipe, PlqyOnNonEmissiveLayerIgnored) {
  const auto env = envelope(parse_recipe("[HTL layer]\n  PLQY_film_fraction: 0.5\n[EML layer]\n  x: 1\n"));
  EXPECT_EQ(env.source, EnvelopeSource::DEFAULT_FULL_RANGE);
}

TEST(Recipe, InvalidPlqyRejected) {
  for (const char* bad : {"0", "-0.2", "1.2", "high"}) {
    const auto doc = parse_recipe(std::string("[EML layer]\n  PLQY_film_fraction: ") + bad + "\n");
    try {
      envelope(doc);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidPlqy) << bad;
    }
  }
  EXPECT_DOUBLE_EQ(envelope(parse_recipe("[EML]\n  PLQY_film_fraction: 1\n")).value_percent, 100.0);
}

TEST(Recipe, EnvelopeOverride) {
  EXPECT_EQ(envelope_override(55.0), (Envelope{55.0, EnvelopeSource::OVERRIDE}));
  EXPECT_THROW(envelope_override(0.0), Error);
  EXPECT_THROW(envelope_override(100.5), Error);
}

namespace {

std::string random_recipe(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> n_layers(1, 5), n_attrs(0, 5), pick(0, 3);
  std::uniform_real_distribution<double> frac(0.01, 1.0);
  const char* roles[] = {"HIL layer", "HTL layer", "EML layer", "ETL layer"};
  const char* words[] = {"PEDOT:PSS", "spin (3000 rpm, 30 s)", "ZnO", "octane; N2"};
  std::string t = "substrate:\n  type: ITO/glass, thickness_nm: 150\nstack:\n";
  const int nl = n_layers(gen);
  for (int l = 0; l < nl; ++l) {
    t += std::string("  [") + roles[pick(gen)] + "]\n";
    const int na = n_attrs(gen);
    for (int a = 0; a < na; ++a) {
      t += "    k" + std::to_string(a) + ": ";
      if (pick(gen) % 2 == 0) t += format_number(frac(gen));
      else t += words[pick(gen)];
      t += (a % 2 == 0 && a + 1 < na) ? ", " : "\n";
    }
    if (na % 2 == 0 || na == 0) t += "\n";
    if (pick(gen) == 0) t += "    PLQY_film_fraction: " + format_number(frac(gen)) + "\n";
  }
  return t;
}

}  // namespace

TEST(RecipeProperty, ParseSerializeIdempotent) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 2000; ++i) {
    const auto first = parse_recipe(random_recipe(gen));
    const auto second = parse_recipe(serialize(first));
    const auto third = parse_recipe(serialize(second));
    ASSERT_TRUE(first.same_structure(second)) << serialize(first);
    ASSERT_TRUE(second.same_structure(third));
  }
  const auto ref = reference();
  EXPECT_TRUE(parse_recipe(serialize(ref)).same_structure(ref));
}

TEST(RecipeProperty, EnvelopeBoundedAndMonotone) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> frac(0.001, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double a = frac(gen), b = frac(gen), bump = frac(gen);
    const auto text = [](double x, double y) {
      return "[EML a]\n  PLQY_film_fraction: " + format_number(x) + "\n[EML b]\n  PLQY_film_fraction: " +
             format_number(y) + "\n";
    };
    const auto base = envelope(parse_recipe(text(a, b)));
    const auto raised = envelope(parse_recipe(text(std::min(1.0, a + bump), b)));
    ASSERT_LE(base.value_percent, 100.0);
    ASSERT_GT(base.value_percent, 0.0);
    ASSERT_GE(raised.value_percent, base.value_percent);
  }
}
