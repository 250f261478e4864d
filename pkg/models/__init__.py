# Tree, clock, excursion and subordinator models
