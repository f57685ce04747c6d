#!/usr/bin/env python3
"""Builds data/lexicon.tsv, the default coarse-tag lexicon.

Word lists are grouped by tag. Verbs are listed by lemma and expanded into
their -s, -ed and -ing forms (irregular forms listed explicitly). When a
word appears under several tags the first of OTHER, NOUN, ADJ, ADV, VERB
wins, so lemmas such as "head" or "look" stay nouns while their inflected
verb forms ("looks", "looking") are verbs.

Run from the repository root:  python3 scripts/make_lexicon.py
"""

import pathlib

VERSION = "1"

OTHER = """
a an the this that these those some any each every either neither no all both
half several many much more most few fewer less least own such what which whose
whatever whichever
i me my mine myself you your yours yourself yourselves he him his himself she
her hers herself it its itself we us our ours ourselves they them their theirs
themselves one ones who whom someone's
about above across after against along amid among around as at before behind
below beneath beside besides between beyond but by despite down during except
for from in inside into like near of off on onto opposite out outside over past
per since than through throughout till to toward towards under underneath
unlike until up upon via with within without
and or nor so yet because although though if unless whether while whereas
once lest
to there
oh ah hey hi hello yes okay ok uh um
0 1 2 3 4 5 6 7 8 9
""".split()

NOUN = """
someone something anything nothing everything somebody anybody nobody everybody
man woman men women boy girl child children kid baby guy lady gentleman person
people family father mother dad mom son daughter brother sister husband wife
friend friends uncle aunt cousin grandfather grandmother king queen prince
princess doctor nurse officer cop police soldier captain driver teacher student
waiter waitress bartender guard agent detective priest judge lawyer pilot
crowd team group couple stranger man's crew boss
head face eyes eye hand hands arm arms leg legs foot feet finger fingers hair
mouth lips lip nose ear ears neck shoulder shoulders back chest body knee knees
heart skin tear tears blood teeth tooth cheek cheeks forehead chin brow brows
gaze glance smile grin frown expression look nod stare breath voice wrist waist
hip hips fist palm thumb lap throat jaw
door doors window windows room house home car cars truck bus train plane boat
ship street road table desk chair bed floor wall walls ceiling stairs steps
kitchen bathroom bedroom office hall hallway corridor building church school
hospital bar restaurant shop store station garage yard garden porch roof gate
fence field forest tree trees grass river lake sea ocean beach sky sun moon
star stars cloud clouds rain snow wind fire water light lights shadow shadows
darkness night day morning evening afternoon time moment minute second hour
week year years city town village country world island mountain hill rock
rocks road path bridge tunnel park lawn pool camp tent cabin castle palace
tower cell prison jail court lobby elevator apartment flat hotel motel diner
cafe club stage theater screen camera phone cellphone computer laptop keyboard
monitor tv television radio book books page pages paper papers letter letters
note notes card cards envelope photo photos picture pictures photograph map sign
newspaper magazine file files folder box boxes bag bags bottle bottles glass
glasses cup cups plate plates bowl knife fork spoon food bread cake coffee tea
wine beer drink drinks cigarette cigar pipe gun guns pistol rifle sword weapon
bullet bullets knife's key keys lock ring rings necklace watch clock hat cap
coat jacket shirt dress suit tie shoes shoe boots boot pants jeans skirt
sweater gloves glove scarf uniform mask helmet bag's purse wallet money cash
coin coins ticket tickets briefcase suitcase luggage package gift flowers flower
rose candle candles lamp mirror curtain curtains blanket pillow sheet sheets
towel soap sink shower bath tub counter shelf shelves drawer cabinet closet
fridge oven stove table's couch sofa bench stool seat seats wheel engine
hood trunk dashboard steering horse horses dog dogs cat cats bird birds fish
animal animals cow pig sheep chicken mouse rat snake wolf bear lion
ball game cards chess piano guitar music song songs dance party wedding
funeral dinner lunch breakfast meal feast kiss hug punch blow shot shots
gunshot explosion crash noise sound silence word words name names line lines
question answer story news message call text email video tape record
paper's screen's button buttons switch handle lever rope chain wire cable
hole edge corner side top bottom end middle center front rear way ground earth
dirt dust mud smoke steam ice stone wood metal gold silver glass's plastic
leather cloth fabric string thread needle pen pencil ink paint brush board
sheet's list bill check contract deal plan idea thought memory dream nightmare
life death war battle fight match race chase escape attack help trouble problem
mistake secret truth lie lies joke fun love hate fear anger joy pain surprise
shock relief hope pride shame guilt attention control power force energy speed
distance direction view scene shot's image images shape form figure figures
silhouette outline pattern color colors red's crowd's audience class lesson
meeting conversation speech interview show movie film episode scene's camera's
street's sidewalk traffic cab taxi car's van motorcycle bike bicycle helicopter
airport platform track tracks deck cabin's cockpit seatbelt belt pocket pockets
sleeve sleeves collar button's zipper lace strap buckle badge medal flag banner
poster statue painting frame frames canvas album guitar's drum drums microphone
speaker speakers headphones earpiece glasses' binoculars telescope gun's trigger
barrel handle's blade axe hammer shovel ladder bucket basket cart tray jar can
cans pot pan kettle mug tray's napkin tablecloth candle's match matches lighter
ash ashtray smoke's cigarette's drugs pill pills syringe needle's bandage
wound scar tattoo makeup lipstick perfume jewelry earring earrings bracelet
""".split()

ADJ = """
good bad big small little large tiny huge great old young new long short tall
high low wide narrow thick thin heavy light dark bright pale white black red
blue green yellow brown gray grey pink purple orange golden silver blond blonde
hot cold warm cool wet dry clean dirty empty full open closed quiet loud soft
hard smooth rough sharp flat round square straight curly fat slim strong weak
rich poor happy sad angry upset scared afraid nervous calm gentle kind mean
nice pretty beautiful handsome ugly cute lovely sweet bitter sour fresh
strange odd weird funny serious sure certain ready busy free alone lonely
tired sleepy awake alive dead sick ill well fine safe dangerous wild crazy mad
shy proud brave bold quick slow fast early late next last first second third
final main only own same different other whole entire real true false fake
wrong right left top bottom middle inner outer upper lower front back near far
deep shallow steep tight loose broken torn worn bare naked elegant fancy plain
simple busy crowded fierce grim stern blank stunned puzzled confused surprised
shocked horrified terrified frightened worried anxious eager excited amused
pleased relieved disappointed annoyed furious bored embarrassed ashamed guilty
innocent curious suspicious determined desperate helpless hopeless tearful
gloomy sullen solemn grave somber teary bloody muddy dusty sandy rocky grassy
sunny rainy snowy windy foggy cloudy misty stormy shiny glossy sleek rusty
wooden metal golden velvet silk leather cotton woolen plastic paper glass
stone brick concrete marble crystal electric digital modern ancient antique
royal military medical legal public private secret personal formal casual
dim faint vivid vast narrow steady tense stiff limp numb sore raw ripe rotten
spare extra tidy neat messy shabby scruffy ragged frail sturdy huge enormous
giant massive tiny slender skinny muscular bald bearded masked hooded
""".split()

ADV = """
not never always often sometimes usually again still just already also too very
really quite rather almost nearly even ever soon now then later here there
away back forward forwards backward backwards together apart aside around
ahead behind inside outside upstairs downstairs indoors outdoors home abroad
once twice yet perhaps maybe instead anyway however therefore meanwhile
otherwise somehow somewhere anywhere everywhere nowhere today tonight tomorrow
yesterday far further farther almost alone altogether else enough less more
most much little so thus well fast hard straight long high low deep close
overhead underneath onward upward downward sideways inward outward afterwards
beforehand anymore
""".split()

VERBS_REGULAR = """
walk look turn open close pull push kiss touch watch wait stare glance smile
nod shrug laugh cry yell scream shout call answer ask help start stop climb
jump kick punch grab reach pick drop toss roll slip step move lift raise lower
point wave clap knock pass join follow enter exit return arrive leave climb
lean rest rush hurry race crawl dance play pray listen talk whisper mutter
sigh gasp cough sniff kiss hug hold pause glare peer squint blink frown scowl
grin chuckle giggle sob weep wipe rub scratch pat tap press pour fill empty
clean wash dress undress brush comb shave paint draw sign type print fold
unfold pack unpack load unload lock unlock check search pull tug yank shove
hand offer accept refuse show hide cover uncover reveal notice spot study
examine inspect realize remember forget wonder guess hope want need like love
hate fear worry trust believe agree marry kill murder attack rescue save
protect guard escort escape chase hunt follow track drive park crash flip
spin twist bend stretch yawn gaze glower slam bang smash crash burn light
fill ignore order kneel jerk duck dodge aim fire load cock pump shoot stab
slash lock shut land fly float sail row swim dive splash wade soak drip
pour spill wander stroll march limp stumble trip tumble collapse faint wake
stir shiver tremble shake nod huddle cuddle snuggle stroke caress squeeze
clutch grip hold clasp cradle carry drag haul lug hoist mount dismount
straddle settle perch sit stand lie lay
""".split()

# lemma: (third person, past, present participle)
VERBS_IRREGULAR = {
    "be": ("is", "was", "being"),
    "have": ("has", "had", "having"),
    "do": ("does", "did", "doing"),
    "go": ("goes", "went", "going"),
    "come": ("comes", "came", "coming"),
    "get": ("gets", "got", "getting"),
    "give": ("gives", "gave", "giving"),
    "take": ("takes", "took", "taking"),
    "make": ("makes", "made", "making"),
    "see": ("sees", "saw", "seeing"),
    "say": ("says", "said", "saying"),
    "tell": ("tells", "told", "telling"),
    "know": ("knows", "knew", "knowing"),
    "think": ("thinks", "thought", "thinking"),
    "find": ("finds", "found", "finding"),
    "run": ("runs", "ran", "running"),
    "sit": ("sits", "sat", "sitting"),
    "stand": ("stands", "stood", "standing"),
    "lie": ("lies", "lay", "lying"),
    "lay": ("lays", "laid", "laying"),
    "shake": ("shakes", "shook", "shaking"),
    "hold": ("holds", "held", "holding"),
    "put": ("puts", "put", "putting"),
    "set": ("sets", "set", "setting"),
    "hit": ("hits", "hit", "hitting"),
    "cut": ("cuts", "cut", "cutting"),
    "shut": ("shuts", "shut", "shutting"),
    "let": ("lets", "let", "letting"),
    "read": ("reads", "read", "reading"),
    "write": ("writes", "wrote", "writing"),
    "eat": ("eats", "ate", "eating"),
    "drink": ("drinks", "drank", "drinking"),
    "drive": ("drives", "drove", "driving"),
    "ride": ("rides", "rode", "riding"),
    "fly": ("flies", "flew", "flying"),
    "fall": ("falls", "fell", "falling"),
    "throw": ("throws", "threw", "throwing"),
    "catch": ("catches", "caught", "catching"),
    "bring": ("brings", "brought", "bringing"),
    "buy": ("buys", "bought", "buying"),
    "sell": ("sells", "sold", "selling"),
    "send": ("sends", "sent", "sending"),
    "spend": ("spends", "spent", "spending"),
    "leave": ("leaves", "left", "leaving"),
    "lose": ("loses", "lost", "losing"),
    "win": ("wins", "won", "winning"),
    "meet": ("meets", "met", "meeting"),
    "feel": ("feels", "felt", "feeling"),
    "keep": ("keeps", "kept", "keeping"),
    "sleep": ("sleeps", "slept", "sleeping"),
    "sweep": ("sweeps", "swept", "sweeping"),
    "weep": ("weeps", "wept", "weeping"),
    "creep": ("creeps", "crept", "creeping"),
    "begin": ("begins", "began", "beginning"),
    "swim": ("swims", "swam", "swimming"),
    "sing": ("sings", "sang", "singing"),
    "ring": ("rings", "rang", "ringing"),
    "sink": ("sinks", "sank", "sinking"),
    "stick": ("sticks", "stuck", "sticking"),
    "strike": ("strikes", "struck", "striking"),
    "swing": ("swings", "swung", "swinging"),
    "hang": ("hangs", "hung", "hanging"),
    "dig": ("digs", "dug", "digging"),
    "wear": ("wears", "wore", "wearing"),
    "tear": ("tears", "tore", "tearing"),
    "bear": ("bears", "bore", "bearing"),
    "break": ("breaks", "broke", "breaking"),
    "speak": ("speaks", "spoke", "speaking"),
    "wake": ("wakes", "woke", "waking"),
    "choose": ("chooses", "chose", "choosing"),
    "freeze": ("freezes", "froze", "freezing"),
    "steal": ("steals", "stole", "stealing"),
    "hide": ("hides", "hid", "hiding"),
    "bite": ("bites", "bit", "biting"),
    "slide": ("slides", "slid", "sliding"),
    "light": ("lights", "lit", "lighting"),
    "lead": ("leads", "led", "leading"),
    "feed": ("feeds", "fed", "feeding"),
    "flee": ("flees", "fled", "fleeing"),
    "shoot": ("shoots", "shot", "shooting"),
    "fight": ("fights", "fought", "fighting"),
    "seek": ("seeks", "sought", "seeking"),
    "teach": ("teaches", "taught", "teaching"),
    "grow": ("grows", "grew", "growing"),
    "blow": ("blows", "blew", "blowing"),
    "draw": ("draws", "drew", "drawing"),
    "build": ("builds", "built", "building"),
    "bend": ("bends", "bent", "bending"),
    "lend": ("lends", "lent", "lending"),
    "rise": ("rises", "rose", "rising"),
    "shine": ("shines", "shone", "shining"),
    "hear": ("hears", "heard", "hearing"),
    "pay": ("pays", "paid", "paying"),
    "mean": ("means", "meant", "meaning"),
    "understand": ("understands", "understood", "understanding"),
    "forget": ("forgets", "forgot", "forgetting"),
    "become": ("becomes", "became", "becoming"),
    "kneel": ("kneels", "knelt", "kneeling"),
    "spit": ("spits", "spat", "spitting"),
    "split": ("splits", "split", "splitting"),
    "spread": ("spreads", "spread", "spreading"),
    "quit": ("quits", "quit", "quitting"),
    "can": ("can", "could", "can"),
    "will": ("will", "would", "will"),
    "shall": ("shall", "should", "shall"),
    "may": ("may", "might", "may"),
    "must": ("must", "must", "must"),
    "are": ("are", "were", "are"),
    "am": ("am", "am", "am"),
}

CONSONANT_DOUBLING = {
    "stop", "drop", "grab", "nod", "slip", "step", "shrug", "clap", "hug", "pat",
    "tap", "rub", "jog", "nap", "plan", "skip", "trip", "wrap", "tug", "flip",
    "stab", "mop", "pin", "grin", "dip", "drip", "chop", "ship", "rob", "beg",
    "slam", "sob", "tip", "zip", "spot", "jab", "peg", "ban", "jam", "wag",
}


def inflect(lemma):
    if lemma in CONSONANT_DOUBLING:
        last = lemma[-1]
        return lemma + "s", lemma + last + "ed", lemma + last + "ing"
    if lemma.endswith("e") and not lemma.endswith("ee"):
        s = lemma + "s"
        return s, lemma + "d", lemma[:-1] + "ing"
    if lemma.endswith("y") and lemma[-2] not in "aeiou":
        return lemma[:-1] + "ies", lemma[:-1] + "ied", lemma + "ing"
    if lemma.endswith(("s", "sh", "ch", "x", "z")):
        return lemma + "es", lemma + "ed", lemma + "ing"
    return lemma + "s", lemma + "ed", lemma + "ing"


def main():
    root = pathlib.Path(__file__).resolve().parent.parent
    entries = {}

    def add(word, tag):
        word = word.lower()
        # wordpunct tokenization never yields tokens containing apostrophes
        if not word.isalnum():
            return
        if word not in entries:
            entries[word] = tag

    for w in OTHER:
        add(w, "OTHER")
    for w in NOUN:
        add(w, "NOUN")
    for w in ADJ:
        add(w, "ADJ")
    for w in ADV:
        add(w, "ADV")
    for lemma in VERBS_REGULAR:
        add(lemma, "VERB")
        for form in inflect(lemma):
            add(form, "VERB")
    for lemma, forms in VERBS_IRREGULAR.items():
        add(lemma, "VERB")
        for form in forms:
            add(form, "VERB")

    # Words the suffix rules must handle on their own.
    for w in ("quickly",):
        entries.pop(w, None)

    out = root / "data" / "lexicon.tsv"
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write("# fib default coarse-tag lexicon\n")
        f.write(f"# version: {VERSION}\n")
        for word in sorted(entries):
            f.write(f"{word}\t{entries[word]}\n")
    print(f"wrote {len(entries)} entries to {out}")


if __name__ == "__main__":
    main()
