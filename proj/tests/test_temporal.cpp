#include <gtest/gtest.h>

#include "support.hpp"

using namespace mailweave;
using mailweave::testing::d;
using mailweave::testing::TempDir;

namespace {

Assertion fact(std::string field, std::string value, Date start, TemporalBound end, Date asserted) {
  Assertion a;
  a.field = std::move(field);
  a.value = std::move(value);
  a.start = start;
  a.end = end;
  a.asserted_at = asserted;
  return a;
}

Record john_doe() {
  Record r{"john.doe@xmlcorp.com", Schema::person, {}};
  assert_fact(r, fact("functions", "XML Corp. CEO", d(2001, 1, 1), TemporalBound::on(d(2003, 12, 31)),
                      d(2004, 6, 6)));
  assert_fact(r, fact("functions", "XML Corp. CEO", d(2004, 6, 6), TemporalBound::running(), d(2004, 6, 6)));
  retract_fact(r, "functions", "t1", TemporalBound::on(d(2003, 11, 30)), d(2005, 4, 10));
  return r;
}

}  // namespace

TEST(Temporal, BoundsParseAndPrint) {
  EXPECT_TRUE(parse_bound("running").is_running());
  EXPECT_EQ(parse_bound("2003-31-12").date, d(2003, 12, 31));
  EXPECT_EQ(to_string(TemporalBound::running()), "running");
  EXPECT_EQ(to_string(TemporalBound::on(d(2001, 1, 1))), "2001-01-01");
  EXPECT_THROW(parse_bound("soon"), DateError);
}

TEST(Temporal, IntervalsAreClosed) {
  TemporalAnnotation a;
  a.start = TemporalBound::on(d(2001, 1, 1));
  a.end = TemporalBound::on(d(2001, 1, 31));
  EXPECT_TRUE(a.covers(d(2001, 1, 1)));
  EXPECT_TRUE(a.covers(d(2001, 1, 31)));
  EXPECT_FALSE(a.covers(d(2000, 12, 31)));
  EXPECT_FALSE(a.covers(d(2001, 2, 1)));
  a.end = TemporalBound::running();
  EXPECT_TRUE(a.covers(d(9999, 12, 31)));
}

TEST(Temporal, AnnotationIdsAreRecordWide) {
  Record r{"x", Schema::person, {}};
  EXPECT_EQ(assert_fact(r, fact("a", "1", d(2000, 1, 1), TemporalBound::running(), d(2000, 1, 1))), "t1");
  EXPECT_EQ(assert_fact(r, fact("b", "2", d(2000, 1, 1), TemporalBound::running(), d(2000, 1, 1))), "t2");
  EXPECT_EQ(assert_fact(r, fact("a", "1", d(2001, 1, 1), TemporalBound::running(), d(2001, 1, 1))), "t3");
  EXPECT_EQ(r.fields["a"].size(), 1u);
  EXPECT_EQ(r.fields["a"][0].annotations.size(), 2u);
}

TEST(Temporal, AssertRejectsInvertedInterval) {
  Record r{"x", Schema::person, {}};
  EXPECT_THROW(assert_fact(r, fact("a", "1", d(2002, 1, 1), TemporalBound::on(d(2001, 1, 1)), d(2002, 1, 1))),
               IntervalError);
  EXPECT_TRUE(r.fields.empty());
}

TEST(Temporal, RetractionKeepsHistory) {
  const Record r = john_doe();
  const auto& anns = r.fields.at("functions").at(0).annotations;
  ASSERT_EQ(anns.size(), 3u);
  EXPECT_EQ(anns[0].status, AnnotationStatus::superseded);
  EXPECT_EQ(anns[0].superseded_by, "t3");
  EXPECT_EQ(anns[0].end.date, d(2003, 12, 31));
  EXPECT_EQ(anns[2].start.date, d(2001, 1, 1));
  EXPECT_EQ(anns[2].end.date, d(2003, 11, 30));
  EXPECT_EQ(anns[2].asserted_at, d(2005, 4, 10));
  EXPECT_EQ(anns[2].status, AnnotationStatus::active);
}

TEST(Temporal, RetractionErrors) {
  Record r = john_doe();
  EXPECT_THROW(retract_fact(r, "functions", "t1", TemporalBound::running(), d(2006, 1, 1)), AnnotationError);
  EXPECT_THROW(retract_fact(r, "functions", "t9", TemporalBound::running(), d(2006, 1, 1)), AnnotationError);
  EXPECT_THROW(retract_fact(r, "nothing", "t2", TemporalBound::running(), d(2006, 1, 1)), AnnotationError);
  EXPECT_THROW(retract_fact(r, "functions", "t2", TemporalBound::running(), d(2004, 1, 1)), AnnotationError);
  EXPECT_THROW(retract_fact(r, "functions", "t2", TemporalBound::on(d(2004, 1, 1)), d(2006, 1, 1)),
               IntervalError);
}

TEST(Temporal, SnapshotsFollowKnowledge) {
  const Record r = john_doe();
  const std::vector<std::string> ceo{"XML Corp. CEO"};
  auto functions = [&](Date v, std::optional<Date> tx) {
    const SnapshotView s = snapshot_asof(r, v, tx);
    const auto* f = s.get("functions");
    return f ? *f : std::vector<std::string>{};
  };
  EXPECT_EQ(functions(d(2002, 6, 1), std::nullopt), ceo);
  EXPECT_EQ(functions(d(2003, 12, 15), d(2004, 12, 31)), ceo);
  EXPECT_TRUE(functions(d(2003, 12, 15), d(2005, 4, 10)).empty());
  EXPECT_EQ(functions(d(2004, 7, 1), std::nullopt), ceo);
  // Nothing was known before the first assertion.
  EXPECT_TRUE(snapshot_asof(r, d(2002, 6, 1), d(2004, 6, 5)).empty());
  EXPECT_TRUE(functions(d(2000, 1, 1), std::nullopt).empty());
  EXPECT_TRUE(functions(d(2004, 1, 1), std::nullopt).empty());
}

TEST(Temporal, CustomEventsAreNotValidTime) {
  Record r{"x", Schema::person, {}};
  Assertion a = fact("functions", "Chair", d(2001, 1, 1), TemporalBound::running(), d(2001, 1, 1));
  a.event_type = "nomination";
  assert_fact(r, a);
  EXPECT_TRUE(snapshot_asof(r, d(2002, 1, 1)).empty());
  a.event_type = std::string(kTransactionEvent);
  assert_fact(r, a);
  EXPECT_TRUE(snapshot_asof(r, d(2002, 1, 1)).empty());
}

TEST(Temporal, ValidateRejectsBrokenRecords) {
  Record r = john_doe();
  r.fields["functions"][0].annotations[1].annotation_id = "t1";
  EXPECT_THROW(validate_record(r), SchemaError);
  r = john_doe();
  r.fields["functions"][0].annotations[0].superseded_by.reset();
  EXPECT_THROW(validate_record(r), SchemaError);
  r = john_doe();
  r.fields["functions"][0].annotations[0].superseded_by = "t7";
  EXPECT_THROW(validate_record(r), SchemaError);
  r = john_doe();
  r.fields["bad name"] = r.fields["functions"];
  EXPECT_THROW(validate_record(r), SchemaError);
  r = john_doe();
  r.record_id = "a\nb";
  EXPECT_THROW(validate_record(r), SchemaError);
}

TEST(Xml, ParsesEntitiesCdataAndComments) {
  const xml::Node root = xml::parse(
      "\xEF\xBB\xBF<?xml version=\"1.0\"?>\n<!-- c -->\n<a x='1 &amp; 2'>t&lt;&#65;&#x42;<![CDATA[<raw>]]>"
      "<b/></a>");
  EXPECT_EQ(root.name, "a");
  EXPECT_EQ(*root.attribute("x"), "1 & 2");
  EXPECT_EQ(xml::Parser::decode(root.leading_raw), "t<AB<raw>");
  ASSERT_EQ(root.children.size(), 1u);
  EXPECT_EQ(root.children[0].name, "b");
}

TEST(Xml, ErrorsCarryPositions) {
  try {
    xml::parse("<a>\n  <b></c>\n</a>");
    FAIL() << "no error";
  } catch (const XmlError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(xml::parse("<!DOCTYPE a><a/>"), XmlError);
  // Character data is decoded on access.
  EXPECT_THROW(xml::Parser::decode("&bogus;"), XmlError);
  EXPECT_THROW(xml::parse("<a></a><b/>"), XmlError);
}

TEST(RecordXml, ExactLayout) {
  const std::string expected =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<person id=\"john.doe@xmlcorp.com\">\n"
      "  <functions>\n"
      "    <value>XML Corp. CEO\n"
      "      <TemporalInformation id=\"t1\" asserted-at=\"2004-06-06\" status=\"superseded\" superseded-by=\"t3\">\n"
      "        <start><date>2001-01-01</date></start>\n"
      "        <end><date>2003-12-31</date></end>\n"
      "        <type>valid</type>\n"
      "      </TemporalInformation>\n"
      "      <TemporalInformation id=\"t2\" asserted-at=\"2004-06-06\" status=\"active\">\n"
      "        <start><date>2004-06-06</date></start>\n"
      "        <end><running></running></end>\n"
      "        <type>valid</type>\n"
      "      </TemporalInformation>\n"
      "      <TemporalInformation id=\"t3\" asserted-at=\"2005-04-10\" status=\"active\">\n"
      "        <start><date>2001-01-01</date></start>\n"
      "        <end><date>2003-11-30</date></end>\n"
      "        <type>valid</type>\n"
      "      </TemporalInformation>\n"
      "    </value>\n"
      "  </functions>\n"
      "</person>\n";
  EXPECT_EQ(serialize_record(john_doe()), expected);
  EXPECT_EQ(parse_record(expected), john_doe());
}

TEST(RecordXml, AwkwardValuesRoundTrip) {
  Record r{"odd <id> & \"q\"", Schema::institution, {}};
  Assertion a = fact("name", "  leading\nnewline\ttab & <tag> \"q\" trailing  ", d(1999, 1, 1),
                     TemporalBound::running(), d(1999, 1, 1));
  a.source = "hand entry <notes>";
  a.ref = Schema::person;
  assert_fact(r, a);
  assert_fact(r, fact("name", "", d(1999, 1, 1), TemporalBound::running(), d(1999, 2, 1)));
  EXPECT_EQ(parse_record(serialize_record(r)), r);
}

TEST(RecordXml, RejectsUnknownStructure) {
  std::string doc = serialize_record(john_doe());
  std::string bad = doc;
  bad.replace(bad.find("<type>"), 6, "<kind>");
  bad.replace(bad.find("</type>"), 7, "</kind>");
  EXPECT_THROW(parse_record(bad), SchemaError);
  bad = doc;
  bad.replace(bad.find("status=\"active\""), 15, "status=\"maybe\"");
  EXPECT_THROW(parse_record(bad), SchemaError);
  bad = doc;
  bad.replace(bad.find("<person"), 7, "<animal");
  bad.replace(bad.find("</person>"), 9, "</animal>");
  EXPECT_THROW(parse_record(bad), SchemaError);
}

TEST(RecordXml, SnapshotIsPlainXml) {
  const std::string xml = serialize_snapshot(snapshot_asof(john_doe(), d(2002, 6, 1)));
  EXPECT_NE(xml.find("<functions>"), std::string::npos);
  EXPECT_NE(xml.find("XML Corp. CEO"), std::string::npos);
  EXPECT_EQ(xml.find("TemporalInformation"), std::string::npos);
  EXPECT_NO_THROW(xml::parse(xml));
}

TEST(Warehouse, PersistsAcrossOpen) {
  TempDir dir;
  {
    Warehouse w = Warehouse::open(dir.path());
    w.put_record(john_doe());
    Record inst{"ibm", Schema::institution, {}};
    assert_fact(inst, fact("name", "IBM", d(1970, 1, 1), TemporalBound::running(), d(1970, 1, 1)));
    w.put_record(inst);
  }
  Warehouse w = Warehouse::open(dir.path());
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w.get_record(Schema::person, "john.doe@xmlcorp.com"), john_doe());
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "person" / "john.doe@xmlcorp.com.xml"));
  const std::string index = mailweave::testing::slurp(dir.path() / "index");
  EXPECT_EQ(index.rfind("# mailweave warehouse index v1\n", 0), 0u);
  EXPECT_THROW(w.get_record(Schema::person, "nobody"), NotFoundError);
  EXPECT_EQ(w.find_record(Schema::email, "ibm"), nullptr);
}

TEST(Warehouse, SameIdInTwoSchemas) {
  Warehouse w;
  Record a{"same", Schema::person, {}};
  Record b{"same", Schema::institution, {}};
  assert_fact(a, fact("name", "A", d(2000, 1, 1), TemporalBound::running(), d(2000, 1, 1)));
  assert_fact(b, fact("name", "B", d(2000, 1, 1), TemporalBound::running(), d(2000, 1, 1)));
  w.put_records({a, b});
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w.list_records(Schema::person).size(), 1u);
}

TEST(Warehouse, DetectsCorruption) {
  TempDir dir;
  {
    Warehouse w = Warehouse::open(dir.path());
    w.put_record(john_doe());
  }
  const auto file = dir.path() / "person" / "john.doe@xmlcorp.com.xml";
  std::string doc = mailweave::testing::slurp(file);
  doc.replace(doc.find("2001-01-01"), 10, "2001-01-02");
  std::ofstream(file, std::ios::binary | std::ios::trunc) << doc;
  EXPECT_THROW(Warehouse::open(dir.path()), IoError);
}

TEST(Warehouse, FileStemsAreSafe) {
  EXPECT_EQ(detail::file_stem("m01@lists.example.org"), "m01@lists.example.org");
  EXPECT_EQ(detail::file_stem("../etc/passwd"), "%2E.%2Fetc%2Fpasswd");
  EXPECT_EQ(detail::file_stem("a b"), "a%20b");
  EXPECT_LE(detail::file_stem(std::string(400, 'x')).size(), 180u);
  EXPECT_NE(detail::file_stem(std::string(400, 'x')), detail::file_stem(std::string(401, 'x')));
}

TEST(Warehouse, InvalidBatchWritesNothing) {
  Warehouse w;
  Record good = john_doe();
  Record bad{"bad", Schema::person, {}};
  bad.fields["f"] = {};
  EXPECT_THROW(w.put_records({good, bad}), SchemaError);
  EXPECT_EQ(w.size(), 0u);
}

TEST(Facts, FixtureApplies) {
  Warehouse w;
  std::ifstream in(mailweave::testing::fixture("facts.jsonl"));
  const FactStats s = apply_facts(w, in);
  EXPECT_EQ(s.created, 4u);
  EXPECT_EQ(s.asserted, 6u);
  EXPECT_EQ(s.retracted, 2u);
  EXPECT_EQ(s.reports, 3u);
  EXPECT_EQ(w.get_record(Schema::person, "john.doe@xmlcorp.com"), john_doe());
}

TEST(Facts, ErrorsNameTheLine) {
  Warehouse w;
  std::istringstream in("{\"op\":\"create\",\"schema\":\"person\",\"id\":\"x\"}\n{\"op\":\"explode\"}\n");
  try {
    apply_facts(w, in);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("facts line 2"), std::string::npos);
  }
  EXPECT_NE(w.find_record(Schema::person, "x"), nullptr);
}
