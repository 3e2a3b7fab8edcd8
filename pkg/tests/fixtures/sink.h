class Sink : public cyclus::Facility {
 public:
  Sink(cyclus::Context* ctx) {};
  virtual ~Sink() {};

  #pragma cyclus

 private:
  #pragma cyclus var {'default': 1e299, 'units': 'kg'}
  double capacity;
};
