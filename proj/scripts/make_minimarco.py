"""Writes data/minimarco/{corpus.tsv,topics.tsv,qrels.txt}.

Passages are short MS MARCO style snippets grouped by topic. Each topic has
one relevant passage (grade 1) and a few lexical distractors; the rest of the
collection is filler on unrelated subjects.
"""
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "minimarco")

# (query_id, query, relevant passage, [distractors])
TOPICS = [
    ("1045405", "who owns jaguar motors?",
     "Jaguar is the luxury vehicle brand of Jaguar Land Rover, a British multinational car manufacturer with its "
     "headquarters in Whitley, Coventry England, owned by the Indian company Tata Motors since 2008.",
     ["The Jaguar Owners Club welcomes owners of Jaguar motors of every age. Owners meet monthly to swap parts for "
      "their Jaguar motors.",
      "Who owns a jaguar? In some countries private owners keep a jaguar as an exotic pet, although owning a big cat "
      "is banned in most states.",
      "Jaguar Motors owners forum: owners ask who services Jaguar motors and who owns the best garage.",
      "The jaguar is the largest cat in the Americas. Jaguars hunt deer, capybara and caiman in the rainforest.",
      "General Motors owns Chevrolet, Buick, GMC and Cadillac. General Motors is headquartered in Detroit.",
      "Motors for electric bikes: who makes the best hub motors? Owners compare torque and range."]),
    ("1000000", "what is the capital of australia",
     "Canberra is the capital city of Australia. Founded following the federation of the colonies of Australia as "
     "the seat of government for the new nation, it is the largest inland city in the country.",
     ["Sydney is the largest city in Australia and the capital of New South Wales.",
      "Australia is a country and continent surrounded by the Indian and Pacific oceans. Its capital cities host "
      "state parliaments.",
      "The capital gains tax in Australia applies when you sell an asset such as property or shares."]),
    ("1000001", "how long to boil an egg",
     "For a soft boiled egg, boil for 6 minutes; for a hard boiled egg with a firm yolk, boil for 10 to 12 minutes, "
     "then cool the eggs in ice water.",
     ["How long do eggs last in the fridge? Fresh eggs keep for three to five weeks when refrigerated.",
      "An egg is laid by a female bird. Chicken eggs are the most common eggs eaten by people.",
      "Boil water faster by covering the pot with a lid; water boils at 100 degrees Celsius at sea level."]),
    ("1000002", "what causes tides in the ocean",
     "Tides are caused by the gravitational pull of the moon and the sun on the oceans. The moon's gravity pulls "
     "water toward it, creating a bulge and a high tide on the side of Earth facing the moon.",
     ["Ocean currents are driven by wind, water density and the rotation of the Earth.",
      "The tide table lists the times of high and low water for each day at a harbour.",
      "What causes waves? Most ocean waves are caused by wind blowing across the surface of the water."]),
    ("1000003", "symptoms of vitamin d deficiency",
     "Symptoms of vitamin D deficiency include fatigue, bone pain, muscle weakness, muscle aches and mood changes "
     "such as depression. Severe deficiency can cause rickets in children.",
     ["Vitamin D is produced in the skin after exposure to sunlight and is also found in oily fish.",
      "Vitamin C deficiency causes scurvy, with symptoms such as bleeding gums and poor wound healing.",
      "Iron deficiency anemia symptoms include tiredness, pale skin and shortness of breath."]),
    ("1000004", "who wrote pride and prejudice",
     "Pride and Prejudice is an 1813 novel of manners written by Jane Austen. The novel follows Elizabeth Bennet as "
     "she deals with manners, upbringing, morality and marriage.",
     ["Prejudice is a preconceived opinion that is not based on reason or actual experience.",
      "The 2005 film Pride & Prejudice starred Keira Knightley and was directed by Joe Wright.",
      "Charlotte Bronte wrote Jane Eyre, published in 1847 under the pen name Currer Bell."]),
    ("1000005", "how many bones are in the human body",
     "An adult human body has 206 bones. Babies are born with around 270 bones, some of which fuse together as the "
     "body grows.",
     ["The femur is the longest bone in the human body, running from the hip to the knee.",
      "Bone density scans measure how many minerals are in a section of bone.",
      "The human heart pumps about five litres of blood through the body every minute."]),
    ("1000006", "what is the boiling point of water in fahrenheit",
     "The boiling point of water is 212 degrees Fahrenheit, or 100 degrees Celsius, at sea level. At higher "
     "altitudes water boils at a lower temperature.",
     ["To convert Celsius to Fahrenheit, multiply by 9/5 and add 32.",
      "The freezing point of water is 32 degrees Fahrenheit.",
      "Boiling point elevation occurs when a solute such as salt is dissolved in water."]),
    ("1000007", "when did the berlin wall fall",
     "The Berlin Wall fell on 9 November 1989, when East German authorities opened the border crossings and crowds "
     "of Berliners climbed onto the wall and began to tear it down.",
     ["The Great Wall of China was built over many centuries to protect against invasions from the north.",
      "Berlin is the capital of Germany and its largest city, with a population of about 3.7 million.",
      "Autumn is the season when leaves fall from deciduous trees."]),
    ("1000008", "what is the speed of light",
     "The speed of light in a vacuum is exactly 299,792,458 metres per second, about 186,000 miles per second. "
     "Nothing with mass can travel at the speed of light.",
     ["The speed of sound in air is about 343 metres per second at room temperature.",
      "Light bulbs come in LED, halogen and incandescent types.",
      "A light year is the distance light travels in one year."]),
    ("1000009", "how to lower blood pressure naturally",
     "You can lower blood pressure naturally by exercising regularly, reducing salt, losing weight, limiting "
     "alcohol, eating a diet rich in fruit and vegetables, and managing stress.",
     ["Blood pressure is measured in millimetres of mercury and recorded as systolic over diastolic.",
      "Low blood pressure, or hypotension, can cause dizziness and fainting.",
      "Water pressure in a house is usually between 40 and 60 psi."]),
]

FILLER = [
    "Photosynthesis converts light energy into chemical energy stored in glucose.",
    "The Amazon River carries more water than any other river in the world.",
    "Mount Everest, at 8,849 metres, is the highest mountain above sea level.",
    "Python is a programming language that emphasises code readability.",
    "The stock market closed higher on Friday as technology shares rallied.",
    "Honey never spoils because its low moisture and acidity prevent bacteria from growing.",
    "A marathon is a long distance race of 42.195 kilometres.",
    "The Mona Lisa was painted by Leonardo da Vinci in the early sixteenth century.",
    "Coffee beans are the roasted seeds of the Coffea plant.",
    "The Pacific Ocean is the largest and deepest of the world's oceans.",
    "Bees communicate the location of flowers with a waggle dance.",
    "The Roman Empire reached its greatest extent under the emperor Trajan.",
    "Saturn has the most extensive ring system of any planet in the solar system.",
    "Mortgage rates rose for the third straight week, according to lenders.",
    "Basketball was invented by James Naismith in 1891.",
    "Penguins are flightless birds that live almost exclusively in the Southern Hemisphere.",
    "The Eiffel Tower was completed in 1889 for the World's Fair in Paris.",
    "Diamonds are made of carbon atoms arranged in a crystal lattice.",
    "A haiku is a Japanese poem of three lines with five, seven and five syllables.",
    "Volcanoes form where magma reaches the surface of the Earth.",
    "The violin is a string instrument played with a bow.",
    "Yeast makes bread rise by producing carbon dioxide gas.",
    "The Sahara is the largest hot desert in the world.",
    "Chess is played on a board of 64 squares arranged in an eight by eight grid.",
    "Tigers are the largest living cat species and are native to Asia.",
    "Lions live in groups called prides on the savannas of Africa.",
    "The Nile flows north through eleven countries before reaching the Mediterranean Sea.",
    "Antibiotics treat bacterial infections but do not work against viruses.",
    "The printing press was invented by Johannes Gutenberg around 1440.",
    "Owls can rotate their heads up to 270 degrees.",
    "Solar panels convert sunlight directly into electricity.",
    "The Olympic Games are held every four years.",
    "Rainbows appear when sunlight is refracted by water droplets.",
    "Rice is the staple food for more than half of the world's population.",
    "Sharks have been around for more than 400 million years.",
    "The piano has 88 keys.",
    "Glaciers store about 69 percent of the world's fresh water.",
    "The first powered flight was made by the Wright brothers in 1903.",
    "Bamboo is one of the fastest growing plants on Earth.",
    "Ford Motor Company was founded by Henry Ford in 1903 in Dearborn, Michigan.",
    "Toyota Motor Corporation is a Japanese multinational automotive manufacturer.",
    "Land Rover builds four wheel drive vehicles such as the Defender and the Discovery.",
    "Coventry is a city in the West Midlands of England with a long history of car making.",
    "Electric cars use battery packs to power electric motors instead of an engine.",
    "Car insurance premiums depend on the driver's age, record and vehicle.",
    "The Indian Railways network is one of the largest in the world.",
    "Tata Consultancy Services is an Indian information technology services company based in Mumbai.",
    "Luxury watches are often made by hand in Switzerland.",
    "A multinational corporation operates in several countries at once.",
    "William the Conqueror became King of England in 1066.",
    "The FTSE 100 Index tracks the largest companies listed on the London Stock Exchange.",
    "A subsidiary is a company controlled by a holding or parent company.",
    "The jaguarundi is a small wild cat native to Central and South America.",
    "Motorcycle owners should check tyre pressure before every long ride.",
    "Home owners insurance covers damage to a house and its contents.",
    "Who owns the moon? The Outer Space Treaty says no nation can claim it.",
    "Pet owners should vaccinate cats and dogs every year.",
    "Small business owners can deduct some home office expenses.",
]


def main():
    os.makedirs(OUT, exist_ok=True)
    docs = []
    qrels = []
    next_id = 7100000
    for qid, _query, rel, distractors in TOPICS:
        rel_id = str(next_id)
        docs.append((rel_id, rel))
        qrels.append((qid, rel_id))
        next_id += 1
        for d in distractors:
            docs.append((str(next_id), d))
            next_id += 1
    for d in FILLER:
        docs.append((str(next_id), d))
        next_id += 1
    # Interleave so relevant passages are not simply the first id of a block.
    random.Random(7).shuffle(docs)
    with open(os.path.join(OUT, "corpus.tsv"), "w", encoding="utf-8") as f:
        for doc_id, text in docs:
            f.write(f"{doc_id}\t{text}\n")
    with open(os.path.join(OUT, "topics.tsv"), "w", encoding="utf-8") as f:
        for qid, query, _rel, _d in TOPICS:
            f.write(f"{qid}\t{query}\n")
    with open(os.path.join(OUT, "qrels.txt"), "w", encoding="utf-8") as f:
        for qid, doc_id in qrels:
            f.write(f"{qid} 0 {doc_id} 1\n")
    print(f"{len(docs)} docs, {len(TOPICS)} topics")


if __name__ == "__main__":
    main()
