class Source : public cyclus::Facility {
 public:
  Source(cyclus::Context* ctx) {};
  virtual ~Source() {};

  #pragma cyclus

 private:
  #pragma cyclus var {'doc': 'commodity this source produces'}
  std::string commod;
};
