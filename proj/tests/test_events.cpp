#include <gtest/gtest.h>

#include "support.hpp"

using namespace esisig;
using testing_support::kNamespacedUnnormalized;
using testing_support::kNamespacedXml;

namespace {

QualifiedName local(std::string name) { return QualifiedName{std::nullopt, std::move(name), std::nullopt}; }

}  // namespace

TEST(EventsFromXml, MinimalDocument) {
  const auto events = events_from_xml("<a/>");
  const std::vector<DocEvent> expected{StartDocument{}, StartElement{local("a"), {}}, EndElement{local("a")},
                                       EndDocument{}};
  EXPECT_EQ(events, expected);
}

TEST(EventsFromXml, AttributeAndText) {
  const auto events = events_from_xml("<p class='foo'>Hello</p>");
  ASSERT_EQ(events.size(), 5u);
  const auto& start = std::get<StartElement>(events[1]);
  ASSERT_EQ(start.attributes.size(), 1u);
  EXPECT_EQ(start.attributes[0].name, local("class"));
  EXPECT_EQ(start.attributes[0].value, "foo");
  EXPECT_EQ(std::get<Characters>(events[2]).text, "Hello");
}

TEST(EventsFromXml, CharacterReferenceCarriageReturnSurvives) {
  const auto events = events_from_xml("<p>&amp;&#xD;x</p>");
  EXPECT_EQ(std::get<Characters>(events[2]).text, "&\rx");
}

TEST(EventsFromXml, LiteralLineEndsAreNormalized) {
  const auto events = events_from_xml("<p>a\r\nb\rc</p>");
  EXPECT_EQ(std::get<Characters>(events[2]).text, "a\nb\nc");
}

TEST(EventsFromXml, CdataAndCommentsAreInvisible) {
  const auto events = events_from_xml("<p>a<!-- c --><![CDATA[<b>]]>c</p>");
  ASSERT_EQ(events.size(), 5u);
  EXPECT_EQ(std::get<Characters>(events[2]).text, "a<b>c");
}

TEST(EventsFromXml, NamespacesAndPrefixMappings) {
  const auto events = events_from_xml("<x:a xmlns:x='urn:x' xmlns='urn:d'><b x:c='1' d='2'/></x:a>");
  ASSERT_EQ(events.size(), 10u);
  EXPECT_EQ(events[1], DocEvent(StartPrefixMapping{"x", "urn:x"}));
  EXPECT_EQ(events[2], DocEvent(StartPrefixMapping{"", "urn:d"}));
  const auto& a = std::get<StartElement>(events[3]);
  EXPECT_EQ(a.name, (QualifiedName{"urn:x", "a", "x"}));
  EXPECT_TRUE(a.attributes.empty()) << "xmlns attributes are not reported";
  const auto& b = std::get<StartElement>(events[4]);
  EXPECT_EQ(b.name.namespace_uri, std::optional<std::string>("urn:d"));
  ASSERT_EQ(b.attributes.size(), 2u);
  EXPECT_EQ(b.attributes[0].name, (QualifiedName{"urn:x", "c", "x"}));
  EXPECT_EQ(b.attributes[1].name, local("d")) << "unprefixed attributes have no namespace";
  EXPECT_EQ(events[7], DocEvent(EndPrefixMapping{""})) << "ended in reverse declaration order";
  EXPECT_EQ(events[8], DocEvent(EndPrefixMapping{"x"}));
}

TEST(EventsFromXml, ProcessingInstructionDataIsTrimmed) {
  const auto events = events_from_xml("<a><?app   one two  ?></a>");
  EXPECT_EQ(events[2], DocEvent(ProcessingInstruction{"app", "one two"}));
}

TEST(EventsFromXml, WellFormednessErrorCarriesPosition) {
  try {
    events_from_xml("<a>\n<b></a>");
    FAIL() << "expected WellFormednessError";
  } catch (const WellFormednessError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
}

TEST(EventsFromXml, EncodingErrors) {
  EXPECT_THROW(events_from_xml("<a>\xFF\xFE</a>"), EncodingError);
  EXPECT_THROW(events_from_xml("<?xml version='1.0' encoding='x-no-such'?><a/>"), EncodingError);
}

TEST(EventsFromXml, Utf16AndLatin1Inputs) {
  const std::string utf8 = "<a t='\xC3\xA9'>caf\xC3\xA9 \xE2\x86\x92</a>";
  const std::string utf16 = "\xFF\xFE" + unicode::utf8_to_utf16(utf8, true);
  EXPECT_EQ(events_from_xml(utf16), events_from_xml(utf8));
  const std::string latin1 = "<?xml version='1.0' encoding='ISO-8859-1'?><a t='\xE9'>caf\xE9 &#x2192;</a>";
  EXPECT_EQ(events_from_xml(latin1), events_from_xml(utf8));
}

TEST(EventsFromXml, ChunkedFeedingMatchesWholeInput) {
  std::vector<DocEvent> chunked;
  BasicParser parser{EventRecorder{&chunked}};
  for (char c : kNamespacedXml) parser.feed(std::string_view(&c, 1));
  parser.finish();
  EXPECT_EQ(chunked, events_from_xml(kNamespacedXml));
}

TEST(EventsToRecords, AttributesPrecedeStart) {
  const auto records = events_to_records(events_from_xml("<p class='foo'/>"));
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0], EsisRecord(esis::Attr{"class", "foo"}));
  EXPECT_EQ(records[1], EsisRecord(esis::StartElem{"p"}));
}

TEST(EventsToRecords, NamespacedAttributeAndElement) {
  const auto records = events_to_records(events_from_xml("<pfx:p xmlns:pfx='urn:NS' pfx:att='bar'/>"));
  ASSERT_EQ(records.size(), 5u);
  EXPECT_EQ(records[0], EsisRecord(esis::StartMapping{"pfx", "urn:NS"}));
  EXPECT_EQ(records[1], EsisRecord(esis::NsAttr{"urn:NS", "att", "bar"}));
  EXPECT_EQ(records[2], EsisRecord(esis::StartElemNS{"urn:NS", "p"}));
}

TEST(EventsToRecords, IgnorableWhitespaceMapsDirectly) {
  std::vector<EsisRecord> records;
  RecordBuilder builder{RecordRecorder{&records}};
  builder(DocEvent{IgnorableWhitespace{"\n  "}});
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0], EsisRecord(esis::Ignorable{"\n  "}));
}

TEST(EventsToRecords, XmlAttributesAreNotRecords) {
  const auto records = events_to_records(events_from_xml("<a xml:lang='en' b='1'/>"));
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0], EsisRecord(esis::Attr{"b", "1"}));
}

TEST(RenderUnnormalized, NamespacedSample) {
  EXPECT_EQ(render_unnormalized(events_to_records(events_from_xml(kNamespacedXml))), kNamespacedUnnormalized);
}

TEST(RenderUnnormalized, Escapes) {
  EXPECT_EQ(render_record(esis::Text{"\n\n"}), "-\\n\\n");
  EXPECT_EQ(render_record(esis::StartMapping{"pfx", "urn:NS"}), "Mpfx urn:NS");
  EXPECT_EQ(render_record(esis::Text{"a\\b"}), "-a\\\\b");
  EXPECT_EQ(render_record(esis::Text{"x\xC2\x85y\xE2\x80\xA8z\r"}), "-x\\u0085y\\u2028z\\r");
}

TEST(RenderUnnormalized, RoundTripAndInvariants) {
  const std::string docs[] = {
      kNamespacedXml,
      "<a b='x\\y&#10;z'><?t d\\e?>line\\n&#13;&#x85;&#x2028;</a>",
      "<r xmlns='urn:a b'><s xmlns:q='urn:q' q:k=' v '>t</s></r>",
  };
  for (const auto& xml : docs) {
    const auto records = events_to_records(events_from_xml(xml));
    const auto text = render_unnormalized(records);
    EXPECT_EQ(parse_unnormalized(text), records) << xml;
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n';
    EXPECT_EQ(lines, records.size()) << "no raw line end inside a line";
  }
}

TEST(RenderUnnormalized, BracketsBalanceOnGeneratedCorpus) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    corpus::CorpusSpec spec;
    spec.target_bytes = 16 * 1024;
    spec.seed = seed;
    const auto records = events_to_records(events_from_xml(corpus::generate(spec)));
    std::vector<std::string> stack;
    char previous = 0;
    for (const auto& record : records) {
      const char c = start_char(record);
      if (previous == 'A' || previous == 'B') {
        EXPECT_TRUE(c == 'A' || c == 'B' || c == '(' || c == '[') << "attribute record not before a start";
      }
      if (c == '(' || c == '[') stack.push_back(render_record(record).substr(1));
      if (c == ')' || c == ']') {
        ASSERT_FALSE(stack.empty());
        EXPECT_EQ(stack.back(), render_record(record).substr(1));
        stack.pop_back();
      }
      previous = c;
    }
    EXPECT_TRUE(stack.empty());
  }
}
